use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64;
use qcond_core::correlations::{joint_parallel, joint_sequential, sample, verify_equivalence};
use qcond_core::duality::{
    leifer_forward, leifer_reverse, std_iso_forward, std_iso_reverse, verify_measure_commute, verify_roundtrip,
    verify_trace_commute,
};
use qcond_core::fixedpoints::{
    block_example_channel, block_example_states, broadcast_obstruction, cloning_demo, common_fixed_space,
    decompose_common, decompose_fixed_algebra, fixed_point_space, monogamy_demo, universal_broadcast_equiv,
    UniversalInput,
};
use qcond_core::linalg::{identity, op_norm, purity, transpose_in, Subsystem};
use qcond_core::qobjects::{kraus_from_choi, m_prepare, povm_from_ensemble, Check};
use qcond_core::random::{random_channel, random_density, random_povm, Rng64};
use qcond_core::{tol, ComplexMatrix, ComplexVector, DensityOperator, Ensemble, IsoPair, KrausChannel, Povm};
use serde_json::json;

use crate::args::*;
use crate::io::{
    load, save, BipartiteFile, ChannelFile, EnsembleFile, JsonMatrix, PairFile, PovmFile, StateFile, TableFile,
};
use crate::report::{Inputs, Outcome};

fn load_state(path: &Path, inputs: &mut Inputs) -> Result<DensityOperator> {
    load::<StateFile>(path, inputs)?.to_state()
}

fn load_channel(path: &Path, inputs: &mut Inputs) -> Result<KrausChannel> {
    load::<ChannelFile>(path, inputs)?.to_channel()
}

fn load_povm(path: &Path, inputs: &mut Inputs) -> Result<Povm> {
    load::<PovmFile>(path, inputs)?.to_povm()
}

fn load_basis(path: Option<&Path>, inputs: &mut Inputs) -> Result<Option<ComplexMatrix>> {
    path.map(|p| load::<JsonMatrix>(p, inputs)?.to_matrix()).transpose()
}

fn kraus_json(e: &KrausChannel) -> ChannelFile {
    ChannelFile::from_channel(e)
}

/// Dimensions and trial count for random mode.
fn random_setup(r: &RandomArgs, inputs: &mut Inputs) -> Result<(usize, usize, Rng64)> {
    let (Some(da), Some(db)) = (r.dim_a, r.dim_b) else {
        bail!(qcond_core::Error::Validation {
            invariant: "mode",
            detail: "give input files or --dimA and --dimB for random instances".into()
        });
    };
    if da == 0 || db == 0 || da > 64 || db > 64 || r.trials == 0 {
        bail!(qcond_core::Error::Validation {
            invariant: "random-parameters",
            detail: format!("need 1 <= dimA, dimB <= 64 and trials >= 1 (got {da}, {db}, {})", r.trials)
        });
    }
    inputs.add_param("dimA", da);
    inputs.add_param("dimB", db);
    inputs.add_param("trials", r.trials);
    inputs.add_param("seed", r.seed);
    Ok((da, db, Rng64::seed(r.seed)))
}

/// Alternates full-rank and rank-deficient states.
fn random_state(d: usize, trial: usize, rng: &mut Rng64) -> Result<DensityOperator> {
    let rank = if trial.is_multiple_of(2) || d == 1 { d } else { 1 + rng.below(d - 1) };
    Ok(DensityOperator::new(random_density(d, rank, rng))?)
}

/// Keeps the worst value of each check across trials.
#[derive(Default)]
struct Worst {
    checks: Vec<Check>,
    failures: usize,
}

impl Worst {
    fn add(&mut self, trial: Vec<Check>) {
        if trial.iter().any(|c| !c.pass) {
            self.failures += 1;
        }
        if self.checks.is_empty() {
            self.checks = trial;
            return;
        }
        for (acc, c) in self.checks.iter_mut().zip(trial) {
            let worse = if c.lower_bound { c.value < acc.value } else { c.value > acc.value };
            if worse || c.value.is_nan() {
                *acc = c;
            }
        }
    }

    fn finish(self, r: &RandomArgs, da: usize, db: usize) -> Outcome {
        Outcome::new(
            self.checks,
            json!({"mode": "random", "dimA": da, "dimB": db, "trials": r.trials, "failedTrials": self.failures}),
        )
        .seeded(r.seed)
    }
}

pub fn iso_forward(a: &IsoForwardArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let rho = load_state(&a.rho, inputs)?;
    let e = load_channel(&a.channel, inputs)?;
    let basis = load_basis(a.basis.as_deref(), inputs)?;
    let pair = IsoPair::new(rho.clone(), e)?;
    let tau = leifer_forward(&pair, basis.as_ref())?;
    let marginal = transpose_in(&tau.reduced(Subsystem::A), basis.as_ref());
    let checks = vec![
        Check::at_most("trace", (tau.trace() - 1.0).abs(), tol::VALIDATION),
        Check::at_most("marginal_a", op_norm(&(marginal - rho.matrix())), tol::ROUNDTRIP),
    ];
    let file = BipartiteFile::from_state(&tau);
    if let Some(out) = &a.out {
        save(out, &file)?;
    }
    Ok(Outcome::new(checks, json!({"tau": file, "purity": purity(tau.matrix())})))
}

pub fn iso_reverse(a: &IsoReverseArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let tau = load::<BipartiteFile>(&a.tau, inputs)?.to_state()?;
    let basis = load_basis(a.basis.as_deref(), inputs)?;
    let pair = leifer_reverse(&tau, basis.as_ref())?;
    let again = leifer_forward(&pair, basis.as_ref())?;
    let checks = vec![Check::at_most(
        "reforward",
        op_norm(&(again.matrix() - tau.matrix())),
        tol::ROUNDTRIP,
    )];
    let file = PairFile::from_pair(&pair);
    if let Some(out) = &a.out {
        save(out, &file)?;
    }
    Ok(Outcome::new(checks, json!({"pair": file, "supportRank": pair.support_rank()})))
}

pub fn std_forward(a: &StdForwardArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let e = load_channel(&a.channel, inputs)?;
    let tau = std_iso_forward(&e)?;
    let d = e.din();
    let checks = vec![Check::at_most(
        "marginal_a",
        op_norm(&(tau.reduced(Subsystem::A) - identity(d).unscale(d as f64))),
        tol::VALIDATION,
    )];
    let file = BipartiteFile::from_state(&tau);
    if let Some(out) = &a.out {
        save(out, &file)?;
    }
    Ok(Outcome::new(checks, json!({"tau": file})))
}

pub fn std_reverse(a: &StdReverseArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let tau = load::<BipartiteFile>(&a.tau, inputs)?.to_state()?;
    let (da, db) = tau.dims();
    let e = kraus_from_choi(tau.matrix(), da, db)?;
    let mut checks = vec![
        Check::at_most(
            "marginal_a",
            op_norm(&(tau.reduced(Subsystem::A) - identity(da).unscale(da as f64))),
            tol::VALIDATION,
        ),
        Check::at_most("rechoi", op_norm(&(e.choi() - tau.matrix())), tol::ROUNDTRIP),
    ];
    let mut details = json!({"channel": kraus_json(&e)});
    if let Some(path) = &a.state {
        let sigma = load_state(path, inputs)?;
        let out = std_iso_reverse(&tau, &sigma)?;
        checks.push(Check::at_most(
            "kraus_agreement",
            op_norm(&(&out - e.apply(sigma.matrix()))),
            tol::ROUNDTRIP,
        ));
        details["output"] = json!(JsonMatrix::from_matrix(&out));
    }
    if let Some(out) = &a.out {
        save(out, &kraus_json(&e))?;
    }
    Ok(Outcome::new(checks, details))
}

pub fn roundtrip(a: &RoundtripArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if let (Some(rho), Some(channel)) = (&a.rho, &a.channel) {
        let rho = load_state(rho, inputs)?;
        let e = load_channel(channel, inputs)?;
        let basis = load_basis(a.basis.as_deref(), inputs)?;
        let pair = IsoPair::new(rho, e)?;
        let checks = verify_roundtrip(&pair, basis.as_ref())?;
        return Ok(Outcome::new(checks, json!({"mode": "file", "supportRank": pair.support_rank()})));
    }
    let (da, db, mut rng) = random_setup(&a.random, inputs)?;
    let mut worst = Worst::default();
    for t in 0..a.random.trials {
        let rho = random_state(da, t, &mut rng)?;
        let e = random_channel(da, db, 1 + rng.below(3), &mut rng);
        worst.add(verify_roundtrip(&IsoPair::new(rho, e)?, None)?);
    }
    Ok(worst.finish(&a.random, da, db))
}

pub fn equivalence(a: &EquivalenceArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if let (Some(rho), Some(channel), Some(m), Some(n)) = (&a.rho, &a.channel, &a.m, &a.n) {
        let rho = load_state(rho, inputs)?;
        let e = load_channel(channel, inputs)?;
        let m = load_povm(m, inputs)?;
        let n = load_povm(n, inputs)?;
        let basis = load_basis(a.basis.as_deref(), inputs)?;
        let pair = IsoPair::new(rho, e)?;
        let check = verify_equivalence(&pair, &m, &n, basis.as_ref())?;
        let sequential = joint_sequential(&pair, &m, &n, basis.as_ref())?;
        let tau = leifer_forward(&pair, basis.as_ref())?;
        let parallel = joint_parallel(&tau, &m.transposed(basis.as_ref()), &n)?;
        if let Some(out) = &a.out {
            save(out, &TableFile::from_table(&sequential))?;
        }
        return Ok(Outcome::new(
            vec![check],
            json!({
                "mode": "file",
                "sequential": TableFile::from_table(&sequential),
                "parallel": TableFile::from_table(&parallel),
            }),
        ));
    }
    let (da, db, mut rng) = random_setup(&a.random, inputs)?;
    let mut worst = Worst::default();
    for t in 0..a.random.trials {
        let rho = random_state(da, t, &mut rng)?;
        let e = random_channel(da, db, 2, &mut rng);
        let m = random_povm(da, 1 + rng.below(5), &mut rng);
        let n = random_povm(db, 1 + rng.below(5), &mut rng);
        worst.add(vec![verify_equivalence(&IsoPair::new(rho, e)?, &m, &n, None)?]);
    }
    Ok(worst.finish(&a.random, da, db))
}

pub fn trace_commute(a: &TraceCommuteArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if let (Some(rho), Some(channel)) = (&a.rho, &a.channel) {
        let (Some(db), Some(dc)) = (a.random.dim_b, a.dim_c) else {
            bail!(qcond_core::Error::Validation {
                invariant: "mode",
                detail: "file mode needs --dimB and --dimC to split the channel output".into()
            });
        };
        let rho = load_state(rho, inputs)?;
        let e = load_channel(channel, inputs)?;
        inputs.add_param("dimB", db);
        inputs.add_param("dimC", dc);
        let check = verify_trace_commute(&rho, &e, (db, dc))?;
        return Ok(Outcome::new(vec![check], json!({"mode": "file"})));
    }
    let dc = a.dim_c.unwrap_or(2);
    let (da, db, mut rng) = random_setup(&a.random, inputs)?;
    inputs.add_param("dimC", dc);
    let mut worst = Worst::default();
    for t in 0..a.random.trials {
        let rho = random_state(da, t, &mut rng)?;
        let e = random_channel(da, db * dc, 2, &mut rng);
        worst.add(vec![verify_trace_commute(&rho, &e, (db, dc))?]);
    }
    let mut outcome = worst.finish(&a.random, da, db);
    outcome.details["dimC"] = json!(dc);
    Ok(outcome)
}

pub fn measure_commute(a: &MeasureCommuteArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if let (Some(rho), Some(channel), Some(povm)) = (&a.rho, &a.channel, &a.povm) {
        let rho = load_state(rho, inputs)?;
        let e = load_channel(channel, inputs)?;
        let m = load_povm(povm, inputs)?;
        let outcome = a.outcome.clone().unwrap_or_else(|| m.labels()[0].clone());
        inputs.add_param("outcome", &outcome);
        let checks = verify_measure_commute(&rho, &e, &m, &outcome)?;
        return Ok(Outcome::new(checks, json!({"mode": "file", "outcome": outcome})));
    }
    let (da, db, mut rng) = random_setup(&a.random, inputs)?;
    let mut worst = Worst::default();
    for _ in 0..a.random.trials {
        let rho = DensityOperator::new(random_density(da, da, &mut rng))?;
        let e = random_channel(da, db, 2, &mut rng);
        let m = random_povm(da, 2 + rng.below(3), &mut rng);
        let label = m.labels()[0].clone();
        worst.add(verify_measure_commute(&rho, &e, &m, &label)?);
    }
    Ok(worst.finish(&a.random, da, db))
}

fn lemma_checks(m: &Povm, rho: &DensityOperator) -> Result<(Vec<Check>, Ensemble, Povm)> {
    let ens = m_prepare(m, rho)?;
    let mixture = op_norm(&(ens.average() - rho.matrix()));
    let rebuilt = povm_from_ensemble(&ens, rho)?;
    let again = m_prepare(&rebuilt, rho)?;
    let converse = if again.len() != ens.len() {
        f64::INFINITY
    } else {
        ens.members()
            .iter()
            .zip(again.members())
            .map(|(x, y)| (x.weight - y.weight).abs().max(op_norm(&(x.state.matrix() - y.state.matrix()))))
            .fold(0.0, f64::max)
    };
    Ok((
        vec![
            Check::at_most("mixture", mixture, tol::VALIDATION),
            Check::at_most("converse", converse, tol::MIXTURE),
        ],
        ens,
        rebuilt,
    ))
}

pub fn povm_ensemble(a: &PovmEnsembleArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if let (Some(rho), Some(povm)) = (&a.rho, &a.povm) {
        let rho = load_state(rho, inputs)?;
        let m = load_povm(povm, inputs)?;
        let (checks, ens, rebuilt) = lemma_checks(&m, &rho)?;
        let file = EnsembleFile::from_ensemble(&ens);
        if let Some(out) = &a.out {
            save(out, &file)?;
        }
        return Ok(Outcome::new(
            checks,
            json!({"mode": "file", "ensemble": file, "rebuiltPovm": PovmFile::from_povm(&rebuilt)}),
        ));
    }
    let (da, db, mut rng) = random_setup(&a.random, inputs)?;
    let mut worst = Worst::default();
    for t in 0..a.random.trials {
        let rho = random_state(da, t, &mut rng)?;
        let m = random_povm(da, 2 + rng.below(4), &mut rng);
        worst.add(lemma_checks(&m, &rho)?.0);
    }
    Ok(worst.finish(&a.random, da, db))
}

pub fn fixed_points(a: &FixedPointsArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let e1 = load_channel(&a.channel, inputs)?;
    let e2 = a.channel2.as_deref().map(|p| load_channel(p, inputs)).transpose()?;
    let space = match &e2 {
        Some(e2) => common_fixed_space(&e1, e2)?,
        None => fixed_point_space(&e1)?,
    };
    let mut checks = vec![Check::at_most("residual", space.residual(&e1), tol::NULLSPACE)];
    if let Some(e2) = &e2 {
        checks.push(Check::at_most("residual.channel2", space.residual(e2), tol::NULLSPACE));
    }
    let basis: Vec<JsonMatrix> = space.basis().iter().map(JsonMatrix::from_matrix).collect();
    Ok(Outcome::new(
        checks,
        json!({"dim": space.dim(), "ambientDim": space.ambient_dim(), "basis": basis}),
    ))
}

pub fn decompose(a: &DecomposeArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let e1 = load_channel(&a.channel, inputs)?;
    let mut dec = match &a.channel2 {
        Some(p) => decompose_common(&e1, &load_channel(p, inputs)?)?,
        None => decompose_fixed_algebra(&e1)?,
    };
    if let Some(p) = &a.state {
        dec = dec.weighted(&load_state(p, inputs)?)?;
    }
    let blocks: Vec<_> = dec
        .blocks
        .iter()
        .map(|b| {
            json!({
                "d1": b.d1,
                "d2": b.d2,
                "nu": StateFile::from_state(&b.nu),
                "weight": b.weight,
                "isometry": JsonMatrix::from_matrix(&b.isometry),
            })
        })
        .collect();
    let checks = vec![Check::at_most("reconstruction", dec.reconstruction_error, tol::RECONSTRUCTION)];
    Ok(Outcome::new(
        checks,
        json!({
            "fixedDim": dec.fixed_dim,
            "recurrentSupportRank": dec.recurrent.as_ref().map(|w| w.ncols()),
            "blocks": blocks,
        }),
    ))
}

fn ket(entries: &[f64]) -> ComplexVector {
    let v = ComplexVector::from_iterator(entries.len(), entries.iter().map(|&x| Complex64::new(x, 0.0)));
    v.normalize()
}

/// Pure `|0⟩` and `|+⟩` padded with zeros to dimension `d`.
fn zero_plus(d: usize) -> Result<[DensityOperator; 2]> {
    let mut zero = vec![0.0; d];
    zero[0] = 1.0;
    let mut plus = zero.clone();
    plus[1] = 1.0;
    Ok([DensityOperator::pure(&ket(&zero))?, DensityOperator::pure(&ket(&plus))?])
}

struct DemoInputs {
    sigma: [DensityOperator; 2],
    channels: [KrausChannel; 2],
}

fn demo_inputs(a: &DemoArgs, inputs: &mut Inputs) -> Result<DemoInputs> {
    if let (Some(s1), Some(s2), Some(c1), Some(c2)) = (&a.sigma1, &a.sigma2, &a.channel1, &a.channel2) {
        return Ok(DemoInputs {
            sigma: [load_state(s1, inputs)?, load_state(s2, inputs)?],
            channels: [load_channel(c1, inputs)?, load_channel(c2, inputs)?],
        });
    }
    match a.example {
        Some(Example::Qubit) => {
            inputs.add_param("example", "qubit");
            Ok(DemoInputs {
                sigma: zero_plus(2)?,
                channels: [KrausChannel::identity(2), KrausChannel::identity(2)],
            })
        }
        Some(Example::Block) => {
            inputs.add_param("example", "block");
            let (s1, s2) = block_example_states();
            Ok(DemoInputs {
                sigma: [s1, s2],
                channels: [block_example_channel(), block_example_channel()],
            })
        }
        None => bail!(qcond_core::Error::Validation {
            invariant: "mode",
            detail: "give --sigma1 --sigma2 --channel1 --channel2 or --example".into()
        }),
    }
}

pub fn broadcast_demo(a: &DemoArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let d = demo_inputs(a, inputs)?;
    let w = broadcast_obstruction(&d.sigma[0], &d.sigma[1], &d.channels[0], &d.channels[1])?;
    let factors: Vec<JsonMatrix> = w.factor_states.iter().map(JsonMatrix::from_vector).collect();
    let embedded: Vec<StateFile> = w.embedded_states.iter().map(StateFile::from_state).collect();
    Ok(Outcome::new(
        w.checks.clone(),
        json!({
            "blockIndex": w.block_index,
            "d1": w.block.d1,
            "d2": w.block.d2,
            "overlap": w.overlap,
            "factorStates": factors,
            "embeddedStates": embedded,
        }),
    ))
}

pub fn monogamy(a: &MonogamyArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let d = demo_inputs(&a.demo, inputs)?;
    inputs.add_param("p", a.p);
    let r = monogamy_demo(a.p, &d.sigma[0], &d.sigma[1], &d.channels[0], &d.channels[1])?;
    let verdicts: Vec<_> = r
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "probability": v.probability,
                "purity": v.purity,
                "schmidtCoefficients": v.schmidt_coefficients,
                "schmidtRank": v.schmidt_rank,
                "spectator": JsonMatrix::from_matrix(&v.spectator),
            })
        })
        .collect();
    Ok(Outcome::new(
        r.checks.clone(),
        json!({"blockIndex": r.block_index, "d1": r.d1, "d2": r.d2, "verdicts": verdicts}),
    ))
}

pub fn cloning(a: &CloningArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let (ens, e1, e2) = if let (Some(ens), Some(c1), Some(c2)) = (&a.ensemble, &a.channel1, &a.channel2) {
        (
            load::<EnsembleFile>(ens, inputs)?.to_ensemble()?,
            load_channel(c1, inputs)?,
            load_channel(c2, inputs)?,
        )
    } else {
        let (d, e) = match a.example {
            Some(Example::Qubit) => (2, KrausChannel::identity(2)),
            Some(Example::Block) => (4, block_example_channel()),
            None => bail!(qcond_core::Error::Validation {
                invariant: "mode",
                detail: "give --ensemble --channel1 --channel2 or --example".into()
            }),
        };
        inputs.add_param("example", d);
        let [s1, s2] = zero_plus(d)?;
        (Ensemble::from_pairs(vec![(0.5, s1), (0.5, s2)])?, e.clone(), e)
    };
    let r = cloning_demo(&ens, &e1, &e2)?;
    Ok(Outcome::new(
        r.checks.clone(),
        json!({"blockIndex": r.block_index, "purities": r.purities, "schmidtRanks": r.schmidt_ranks}),
    ))
}

pub fn universal(a: &UniversalArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let input = if let (Some(c1), Some(c2)) = (&a.channel1, &a.channel2) {
        UniversalInput::Channels(load_channel(c1, inputs)?, load_channel(c2, inputs)?)
    } else if let (Some(t1), Some(t2)) = (&a.tau1, &a.tau2) {
        UniversalInput::States(
            load::<BipartiteFile>(t1, inputs)?.to_state()?,
            load::<BipartiteFile>(t2, inputs)?.to_state()?,
        )
    } else {
        let d = match a.example {
            Some(Example::Qubit) => 2,
            Some(Example::Block) => 4,
            None => bail!(qcond_core::Error::Validation {
                invariant: "mode",
                detail: "give --channel1 --channel2, --tau1 --tau2 or --example".into()
            }),
        };
        inputs.add_param("example", d);
        UniversalInput::Channels(KrausChannel::identity(d), KrausChannel::identity(d))
    };
    let r = universal_broadcast_equiv(&input)?;
    let corrections: Vec<JsonMatrix> = r.corrections.iter().map(JsonMatrix::from_matrix).collect();
    let mut checks = r.checks.clone();
    checks.push(Check::at_least("verdict", if r.verdict { 1.0 } else { 0.0 }, 1.0));
    Ok(Outcome::new(checks, json!({"verdict": r.verdict, "corrections": corrections})))
}

pub fn sample_table(a: &SampleArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let table = load::<TableFile>(&a.table, inputs)?.to_table()?;
    inputs.add_param("trials", a.trials);
    inputs.add_param("seed", a.seed);
    let r = sample(&table, a.trials, a.seed)?;
    let counts: Vec<Vec<u64>> = (0..r.counts.nrows())
        .map(|i| (0..r.counts.ncols()).map(|j| r.counts[(i, j)]).collect())
        .collect();
    let details = json!({
        "counts": counts,
        "trials": r.trials,
        "generator": r.generator,
        "tvDistance": r.tv_distance,
    });
    if let Some(out) = &a.out {
        save(out, &details)?;
    }
    Ok(Outcome::new(vec![Check::at_most("tv_distance", r.tv_distance, a.max_tv)], details).seeded(a.seed))
}
