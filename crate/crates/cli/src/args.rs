use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const THEOREMS: &str = "\
Result -> subcommand:
  standard channel/state isomorphism ............ std-iso forward | std-iso reverse
  state-dependent isomorphism (construction) .... iso forward | iso reverse
  isomorphism is a bijection (round trip) ....... verify roundtrip
  parallel vs sequential statistics agree ....... verify equivalence
  isomorphism commutes with partial trace ....... verify trace-commute
  isomorphism vs M^T-measurement update ......... verify measure-commute
  POVM <-> ensemble decomposition lemma ......... verify povm-ensemble
  fixed points of a channel (pair) .............. fixed-points
  fixed-point algebra as sum of M_d1 (x) nu ..... decompose
  no-broadcasting for noncommuting states ....... broadcast-demo
  monogamy of the isomorphic states ............. monogamy-demo
  no-cloning for nonorthogonal pure states ...... cloning-demo
  universal broadcasting <-> max. entanglement .. universal-demo
  sampling a joint outcome table ................ sample

Exit status: 0 all checks pass, 1 invalid input, 2 a check failed, 3 unsupported structure.";

#[derive(Debug, Parser)]
#[command(name = "qcond", version, about = "Quantum conditional states: isomorphisms, verification and fixed-point demos", after_help = THEOREMS)]
pub struct Cli {
    /// Replace the tolerance of every upper-bound check
    #[arg(long, global = true, value_name = "TOL")]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State-dependent isomorphism between (state, channel) pairs and bipartite states
    #[command(subcommand)]
    Iso(IsoCommand),
    /// Standard channel/state isomorphism
    #[command(subcommand, name = "std-iso")]
    StdIso(StdIsoCommand),
    /// Numerical verification of the isomorphism's properties
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Fixed-point space of one channel or the common fixed space of two
    FixedPoints(FixedPointsArgs),
    /// Block decomposition of the fixed-point algebra
    Decompose(DecomposeArgs),
    /// Broadcasting obstruction witness for two noncommuting fixed states
    BroadcastDemo(DemoArgs),
    /// Post-selected pure entangled factors on the isomorphic states
    MonogamyDemo(MonogamyArgs),
    /// Purity of the isomorphic state for a pure nonorthogonal ensemble
    CloningDemo(CloningArgs),
    /// Universal broadcasting versus maximally entangled states
    UniversalDemo(UniversalArgs),
    /// Draw samples from a joint outcome table
    Sample(SampleArgs),
}

#[derive(Debug, Subcommand)]
pub enum IsoCommand {
    /// (rho, E) -> tau
    Forward(IsoForwardArgs),
    /// tau -> (rho, E restricted to the support of rho)
    Reverse(IsoReverseArgs),
}

#[derive(Debug, Subcommand)]
pub enum StdIsoCommand {
    /// E -> (I (x) E)(|Phi+><Phi+|)
    Forward(StdForwardArgs),
    /// tau -> Kraus channel, optionally applied to a state
    Reverse(StdReverseArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    Roundtrip(RoundtripArgs),
    Equivalence(EquivalenceArgs),
    TraceCommute(TraceCommuteArgs),
    MeasureCommute(MeasureCommuteArgs),
    PovmEnsemble(PovmEnsembleArgs),
}

#[derive(Debug, Args)]
pub struct IsoForwardArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub channel: PathBuf,
    /// Unitary whose columns fix the transpose basis (default: computational)
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IsoReverseArgs {
    #[arg(long)]
    pub tau: PathBuf,
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StdForwardArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StdReverseArgs {
    #[arg(long)]
    pub tau: PathBuf,
    /// Input state to push through the recovered channel
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Random-instance mode, used when no input files are given.
#[derive(Debug, Args)]
pub struct RandomArgs {
    #[arg(long = "dimA")]
    pub dim_a: Option<usize>,
    #[arg(long = "dimB")]
    pub dim_b: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long, requires = "channel")]
    pub rho: Option<PathBuf>,
    #[arg(long, requires = "rho")]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Args)]
pub struct EquivalenceArgs {
    #[arg(long, requires_all = ["channel", "m", "n"])]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// POVM on A
    #[arg(long)]
    pub m: Option<PathBuf>,
    /// POVM on B
    #[arg(long)]
    pub n: Option<PathBuf>,
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Write the joint table (file mode)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Args)]
pub struct TraceCommuteArgs {
    #[arg(long, requires_all = ["channel", "dim_b", "dim_c"])]
    pub rho: Option<PathBuf>,
    /// Channel A -> B (x) C
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long = "dimC")]
    pub dim_c: Option<usize>,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Args)]
pub struct MeasureCommuteArgs {
    #[arg(long, requires_all = ["channel", "povm"])]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub povm: Option<PathBuf>,
    /// Outcome label (default: the first)
    #[arg(long)]
    pub outcome: Option<String>,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Args)]
pub struct PovmEnsembleArgs {
    #[arg(long, requires = "povm")]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub povm: Option<PathBuf>,
    /// Write the induced ensemble (file mode)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Args)]
pub struct FixedPointsArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Second channel; the common fixed space is reported
    #[arg(long)]
    pub channel2: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub channel2: Option<PathBuf>,
    /// Invariant state used to fill in block weights
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Example {
    /// |0>, |+> with qubit identity channels
    Qubit,
    /// d = 4 block channel with blocks (2,1) and (1,2)
    Block,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, requires_all = ["sigma2", "channel1", "channel2"], conflicts_with = "example")]
    pub sigma1: Option<PathBuf>,
    #[arg(long)]
    pub sigma2: Option<PathBuf>,
    #[arg(long)]
    pub channel1: Option<PathBuf>,
    #[arg(long)]
    pub channel2: Option<PathBuf>,
    /// Built-in instance instead of files
    #[arg(long, value_enum)]
    pub example: Option<Example>,
}

#[derive(Debug, Args)]
pub struct MonogamyArgs {
    #[command(flatten)]
    pub demo: DemoArgs,
    /// Prior weight of the first state
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct CloningArgs {
    #[arg(long, requires_all = ["channel1", "channel2"], conflicts_with = "example")]
    pub ensemble: Option<PathBuf>,
    #[arg(long)]
    pub channel1: Option<PathBuf>,
    #[arg(long)]
    pub channel2: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub example: Option<Example>,
}

#[derive(Debug, Args)]
pub struct UniversalArgs {
    /// Direction a: channels claimed to be the identity
    #[arg(long, requires = "channel2", conflicts_with_all = ["tau1", "example"])]
    pub channel1: Option<PathBuf>,
    #[arg(long)]
    pub channel2: Option<PathBuf>,
    /// Direction b: bipartite states claimed to be maximally entangled
    #[arg(long, requires = "tau2", conflicts_with = "example")]
    pub tau1: Option<PathBuf>,
    #[arg(long)]
    pub tau2: Option<PathBuf>,
    /// Identity channels on the example's dimension (qubit: 2, block: 4)
    #[arg(long, value_enum)]
    pub example: Option<Example>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the counts
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Upper bound on the total-variation distance to the table
    #[arg(long, default_value_t = 0.02)]
    pub max_tv: f64,
}
