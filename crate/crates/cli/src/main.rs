use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghdm::construction::{build, verify_delta_separation, verify_landmark_distances, ConstructionParams, LabeledGraph};
use ghdm::fatminor::{
    fat_model_certificate, find_fat_model, find_far_path_system, grid, is_fat_path_connected,
    path_connectivity_certificate, path_system_certificate, validate_model, validate_path_system, SearchBudget,
};
use ghdm::graph::{complete_graph, cycle_graph, distance, path_graph, star_graph};
use ghdm::io::{graph_from_json, graph_to_json, labeled_graph_to_json, to_dot};
use ghdm::knx::{derive_params, derive_params_with, extract_kn, Overrides, DEFAULT_SIZE_CAP};
use ghdm::menger::{far_pair_certificate, far_pair_search, no_small_separator, SeparatorMode};
use ghdm::qi::{
    check_conn_image, check_conn_preimage, check_qi, check_separator_transfer, identity_map, map_from_json, VertexMap,
};
use ghdm::treedec::{build_flat, build_recursive, validate};
use ghdm::{Certificate, Error, Graph, Verdict, Vertex, VertexSet, Witness};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "ghdm", version, about = "Build G(h,d,m) instances and run their verifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel checks.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Record wall-clock time in certificates (breaks byte-level reproducibility).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build G(h,d,m) and write it with its landmark labels.
    Build(Instance),
    /// Print a summary of a graph or instance.
    Inspect(Host),
    /// Export a graph or instance as JSON or DOT.
    Export {
        #[command(flatten)]
        host: Host,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run one verification and emit its certificate.
    #[command(subcommand)]
    Verify(Verify),
    /// Run a bounded exhaustive search and emit its certificate.
    #[command(subcommand)]
    Search(Search),
    /// Extract a clique model from a quasi-isometric image.
    #[command(subcommand)]
    Extract(Extract),
    /// Re-check the witness of a certificate against a graph file.
    Revalidate { certificate: PathBuf, graph: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args, Clone, Copy)]
struct Instance {
    #[arg(long)]
    h: u32,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    m: u32,
}

/// A host graph: a JSON file, a grid, or a G(h,d,m) instance.
#[derive(Args, Clone)]
struct Host {
    #[arg(long, conflicts_with_all = ["grid", "h"])]
    graph: Option<PathBuf>,
    /// Grid dimensions as ROWSxCOLS.
    #[arg(long, conflicts_with = "h")]
    grid: Option<String>,
    #[arg(long, requires_all = ["d", "m"])]
    h: Option<u32>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Search-tree node limit.
    #[arg(long, default_value_t = SearchBudget::default().node_limit)]
    budget: u64,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    source: Host,
    /// Target graph JSON; defaults to the source graph.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Map JSON `{"assignment": [...]}`; defaults to the identity.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long = "M")]
    big_m: u64,
    #[arg(long = "A")]
    big_a: u64,
}

#[derive(Subcommand)]
enum Verify {
    /// Pairwise distances between V-set vertices.
    Landmarks(Instance),
    /// Separation of S from T by each S(Δ(x)) plus a root ball.
    DeltaSep {
        #[command(flatten)]
        instance: Instance,
        /// Only this tree level; all levels below h otherwise.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Validate the flat or recursive tree-decomposition.
    Td {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        recursive: bool,
    },
    /// Search for two far-apart S-T paths.
    MengerPair {
        #[command(flatten)]
        instance: Instance,
        #[arg(long = "K")]
        k: u32,
        #[arg(long)]
        avoid_root: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Check that no small vertex set is far from every S-T path.
    MengerSep {
        #[command(flatten)]
        instance: Instance,
        #[arg(long = "l")]
        ell: u32,
        /// Sample this many candidate sets instead of enumerating all.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Refuse exhaustive runs above this many candidates.
        #[arg(long, default_value_t = SeparatorMode::DEFAULT_CAP)]
        cap: u64,
    },
    /// Check the quasi-isometry inequalities for a vertex map.
    Qi(MapArgs),
    /// Check that the image ball of a connected set is connected.
    ConnImage {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<Vertex>,
    },
    /// Check that the preimage ball of a connected target set is connected.
    ConnPreimage {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<Vertex>,
    },
    /// Check that the image ball of a separator still separates.
    SepTransfer {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<Vertex>,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<Vertex>,
        #[arg(long, value_delimiter = ',', required = true)]
        z: Vec<Vertex>,
    },
}

#[derive(Subcommand)]
enum Search {
    /// Search for a K-fat model of a pattern.
    FatModel {
        #[command(flatten)]
        host: Host,
        /// Pattern: cN, kN, pN, starN, gridRxC, or a graph JSON file.
        #[arg(long)]
        pattern: String,
        #[arg(long = "K")]
        k: u32,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Search for paths between two sets, pairwise at least K apart.
    PathSystem {
        #[command(flatten)]
        host: Host,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<Vertex>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<Vertex>,
        #[arg(long)]
        count: usize,
        #[arg(long = "K")]
        k: u32,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Decide K-fat n-path-connectivity of a vertex set.
    PathConnected {
        #[command(flatten)]
        host: Host,
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<Vertex>,
        #[arg(long = "K")]
        k: u32,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Subcommand)]
enum Extract {
    /// Build a 1-fat K_n model from a map of G(h,d,m) into a target graph.
    Kn {
        #[command(flatten)]
        instance: Instance,
        #[arg(long = "M")]
        big_m: u64,
        #[arg(long = "A")]
        big_a: u64,
        #[arg(long)]
        n: u64,
        /// Override the tree level of the separating family.
        #[arg(long)]
        q: Option<u64>,
        /// Override the contraction radius.
        #[arg(long)]
        r: Option<u64>,
        /// Override the number of disjoint paths required.
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = Result<T, Failure>;

/// What a command produced: text to emit and the exit code it implies.
struct Output {
    text: String,
    code: u8,
}

fn exit_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Pass | Verdict::Found | Verdict::ExhaustedNone => 0,
        Verdict::Fail => 1,
        Verdict::BudgetExceeded => 2,
    }
}

struct Ctx {
    timing: bool,
    started: Instant,
}

impl Ctx {
    fn certificate(&self, mut cert: Certificate) -> CliResult<Output> {
        if self.timing {
            cert.stats.elapsed_ms = Some(self.started.elapsed().as_millis() as u64);
        }
        Ok(Output {
            code: exit_code(cert.verdict),
            text: cert.to_canonical_json()?,
        })
    }

    fn certificates(&self, certs: Vec<Certificate>) -> CliResult<Output> {
        let code = certs.iter().map(|c| exit_code(c.verdict)).max().unwrap_or(0);
        let mut values = Vec::with_capacity(certs.len());
        for mut cert in certs {
            if self.timing {
                cert.stats.elapsed_ms = Some(self.started.elapsed().as_millis() as u64);
            }
            values.push(serde_json::to_value(cert).map_err(Error::from)?);
        }
        Ok(Output {
            code,
            text: serde_json::to_string_pretty(&values).map_err(Error::from)?,
        })
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Lib(Error::Io(e)))
}

fn instance(i: Instance) -> CliResult<LabeledGraph> {
    Ok(build(ConstructionParams::new(i.h, i.d, i.m)?)?)
}

fn parse_dims(text: &str) -> Option<(usize, usize)> {
    let (r, c) = text.split_once(['x', 'X'])?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

/// The host graph and, for instances, its labels.
fn host(h: &Host) -> CliResult<(Graph, Option<LabeledGraph>)> {
    if let Some(path) = &h.graph {
        return Ok((graph_from_json(&read(path)?)?, None));
    }
    if let Some(dims) = &h.grid {
        let (r, c) = parse_dims(dims).ok_or_else(|| Failure::Usage(format!("bad grid size {dims:?}")))?;
        return Ok((grid(r, c), None));
    }
    match (h.h, h.d, h.m) {
        (Some(h), Some(d), Some(m)) => {
            let lg = instance(Instance { h, d, m })?;
            Ok((lg.graph.clone(), Some(lg)))
        }
        _ => Err(Failure::Usage("give --graph, --grid, or all of --h --d --m".into())),
    }
}

fn pattern_graph(spec: &str) -> CliResult<Graph> {
    let bad = || Failure::Usage(format!("unknown pattern {spec:?}"));
    let lower = spec.to_ascii_lowercase();
    let num = |prefix: &str| lower.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok());
    if let Some((r, c)) = lower.strip_prefix("grid").and_then(parse_dims) {
        return Ok(grid(r, c));
    }
    if let Some(k) = num("star") {
        return Ok(star_graph(k));
    }
    if let Some(k) = num("c") {
        return Ok(cycle_graph(k)?);
    }
    if let Some(k) = num("k") {
        return Ok(complete_graph(k));
    }
    if let Some(k) = num("p") {
        return Ok(path_graph(k));
    }
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(graph_from_json(&read(path)?)?);
    }
    Err(bad())
}

fn set(items: &[Vertex]) -> VertexSet {
    items.iter().copied().collect()
}

struct LoadedMap {
    source: Graph,
    target: Option<Graph>,
    assignment: Vec<Vertex>,
}

impl LoadedMap {
    fn load(args: &MapArgs) -> CliResult<Self> {
        let (source, _) = host(&args.source)?;
        let target = args.target.as_deref().map(|p| read(p).and_then(|t| Ok(graph_from_json(&t)?))).transpose()?;
        let assignment = match &args.map {
            Some(p) => map_from_json(&read(p)?)?,
            None => identity_map(&source),
        };
        Ok(Self {
            source,
            target,
            assignment,
        })
    }

    fn map(&self) -> CliResult<VertexMap<'_>> {
        Ok(VertexMap::new(
            &self.source,
            self.target.as_ref().unwrap_or(&self.source),
            &self.assignment,
        )?)
    }
}

fn run_verify(ctx: &Ctx, cmd: Verify) -> CliResult<Output> {
    match cmd {
        Verify::Landmarks(i) => ctx.certificate(verify_landmark_distances(&instance(i)?)),
        Verify::DeltaSep { instance: i, level } => {
            let lg = instance(i)?;
            let levels: Vec<usize> = match level {
                Some(l) => vec![l],
                None => (0..lg.params.h as usize).collect(),
            };
            let certs = levels
                .into_iter()
                .map(|l| verify_delta_separation(&lg, l))
                .collect::<Result<Vec<_>, _>>()?;
            if certs.len() == 1 {
                ctx.certificate(certs.into_iter().next().expect("one certificate"))
            } else {
                ctx.certificates(certs)
            }
        }
        Verify::Td { instance: i, recursive } => {
            let lg = instance(i)?;
            let td = if recursive { build_recursive(&lg) } else { build_flat(&lg) };
            let cert = validate(&lg.graph, &td)?
                .param("recursive", recursive)
                .witness(Witness::TreeDecomposition(td));
            ctx.certificate(cert)
        }
        Verify::MengerPair {
            instance: i,
            k,
            avoid_root,
            budget,
        } => {
            let lg = instance(i)?;
            let budget = SearchBudget::nodes(budget.budget);
            let report = far_pair_search(&lg, k, avoid_root, &budget)?;
            ctx.certificate(far_pair_certificate(&lg, k, avoid_root, &budget, &report))
        }
        Verify::MengerSep {
            instance: i,
            ell,
            samples,
            seed,
            cap,
        } => {
            let lg = instance(i)?;
            let mode = match samples {
                Some(count) => {
                    eprintln!("seed: {seed}");
                    SeparatorMode::Sampled { count, seed }
                }
                None => SeparatorMode::Exhaustive { cap },
            };
            ctx.certificate(no_small_separator(&lg, ell, mode)?)
        }
        Verify::Qi(args) => {
            let loaded = LoadedMap::load(&args)?;
            ctx.certificate(check_qi(&loaded.map()?, args.big_m, args.big_a)?)
        }
        Verify::ConnImage { map, set: u } => {
            let loaded = LoadedMap::load(&map)?;
            ctx.certificate(check_conn_image(&loaded.map()?, map.big_m, map.big_a, &set(&u))?)
        }
        Verify::ConnPreimage { map, set: w } => {
            let loaded = LoadedMap::load(&map)?;
            ctx.certificate(check_conn_preimage(&loaded.map()?, map.big_m, map.big_a, &set(&w))?)
        }
        Verify::SepTransfer { map, x, y, z } => {
            let loaded = LoadedMap::load(&map)?;
            let f = loaded.map()?;
            ctx.certificate(check_separator_transfer(&f, map.big_m, map.big_a, &set(&x), &set(&y), &set(&z))?)
        }
    }
}

fn run_search(ctx: &Ctx, cmd: Search) -> CliResult<Output> {
    match cmd {
        Search::FatModel {
            host: h,
            pattern,
            k,
            budget,
        } => {
            let (g, _) = host(&h)?;
            let pattern = pattern_graph(&pattern)?;
            let budget = SearchBudget::nodes(budget.budget);
            let report = find_fat_model(&g, &pattern, k, &budget)?;
            ctx.certificate(fat_model_certificate(&g, &pattern, k, &budget, &report)?)
        }
        Search::PathSystem {
            host: h,
            a,
            b,
            count,
            k,
            budget,
        } => {
            let (g, _) = host(&h)?;
            let (a, b) = (set(&a), set(&b));
            let budget = SearchBudget::nodes(budget.budget);
            let report = find_far_path_system(&g, &a, &b, count, k, &budget)?;
            ctx.certificate(path_system_certificate(&g, &a, &b, k, &budget, &report)?)
        }
        Search::PathConnected {
            host: h,
            w,
            k,
            n,
            budget,
        } => {
            let (g, _) = host(&h)?;
            let w = set(&w);
            let budget = SearchBudget::nodes(budget.budget);
            let report = is_fat_path_connected(&g, &w, k, n, &budget)?;
            ctx.certificate(path_connectivity_certificate(&w, k, n, &budget, &report))
        }
    }
}

fn run_extract(cmd: Extract) -> CliResult<Output> {
    let Extract::Kn {
        instance: i,
        big_m,
        big_a,
        n,
        q,
        r,
        paths,
        target,
        map,
    } = cmd;
    let lg = instance(i)?;
    let derived = derive_params(big_m, big_a, n)?;
    let differs = |want: u64, have: u64| (want != have).then_some(want);
    let overrides = Overrides {
        q,
        r,
        d: differs(u64::from(i.d), derived.d),
        h: differs(u64::from(i.h), derived.h),
        m: paths,
    };
    let params = derive_params_with(big_m, big_a, n, overrides, DEFAULT_SIZE_CAP)?;
    let target = target.as_deref().map(|p| read(p).and_then(|t| Ok(graph_from_json(&t)?))).transpose()?;
    let assignment = match &map {
        Some(p) => map_from_json(&read(p)?)?,
        None => identity_map(&lg.graph),
    };
    let f = VertexMap::new(&lg.graph, target.as_ref().unwrap_or(&lg.graph), &assignment)?;
    let extraction = extract_kn(&lg, &f, big_m, big_a, n, &params)?;
    Ok(Output {
        text: serde_json::to_string_pretty(&extraction).map_err(Error::from)?,
        code: 0,
    })
}

fn run_revalidate(ctx: &Ctx, cert_path: &Path, graph_path: &Path) -> CliResult<Output> {
    let original = Certificate::from_json(&read(cert_path)?)?;
    let g = graph_from_json(&read(graph_path)?)?;
    let witness = original
        .witness
        .as_ref()
        .ok_or_else(|| Failure::Lib(Error::Precondition("certificate carries no witness".into())))?;
    let cert = match witness {
        Witness::PathSystem {
            sources,
            targets,
            paths,
            min_separation,
            avoided,
        } => validate_path_system(&g, &set(sources), &set(targets), paths, *min_separation, &set(avoided)),
        Witness::FatModel(model) => validate_model(&g, model)?,
        Witness::TreeDecomposition(td) => validate(&g, td)?,
        Witness::VertexPair { u, v, distance: recorded } => {
            let actual = distance(&g, &VertexSet::singleton(*u), &VertexSet::singleton(*v))?;
            let verdict = if actual == *recorded { Verdict::Pass } else { Verdict::Fail };
            Certificate::new("vertex-distance", ghdm::Mode::Exhaustive, verdict)
                .param("u", *u)
                .param("v", *v)
                .param("distance", serde_json::to_value(actual).map_err(Error::from)?)
        }
        Witness::Vertices { .. } | Witness::SubsetPair { .. } | Witness::Violation { .. } => {
            return Err(Failure::Lib(Error::Precondition(
                "this witness kind records an obstruction that only a new search can confirm".into(),
            )))
        }
    };
    ctx.certificate(
        cert.param("revalidates", original.claim.as_str())
            .param("original_verdict", serde_json::to_value(original.verdict).map_err(Error::from)?),
    )
}

fn inspect(h: &Host) -> CliResult<Output> {
    let (g, lg) = host(h)?;
    let max_degree = g.vertices().map(|v| g.degree(v)).max().unwrap_or(0);
    let mut summary = serde_json::json!({
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "connected": g.is_connected(),
        "max_degree": max_degree,
    });
    if let Some(lg) = lg {
        summary["root"] = lg.root.into();
        summary["S"] = serde_json::to_value(&lg.s_set).map_err(Error::from)?;
        summary["T"] = serde_json::to_value(&lg.t_set).map_err(Error::from)?;
        summary["v_sets"] = lg.v_sets.len().into();
        summary["copies"] = lg.copies.len().into();
        summary["leaves"] = lg.leaves.len().into();
        summary["spines"] = lg.spines.len().into();
    }
    Ok(Output {
        text: serde_json::to_string_pretty(&summary).map_err(Error::from)?,
        code: 0,
    })
}

fn run(cli: Cli) -> CliResult<Output> {
    let ctx = Ctx {
        timing: cli.timing,
        started: Instant::now(),
    };
    match cli.command {
        Command::Build(i) => Ok(Output {
            text: labeled_graph_to_json(&instance(i)?)?,
            code: 0,
        }),
        Command::Inspect(h) => inspect(&h),
        Command::Export { host: h, format } => {
            let (g, lg) = host(&h)?;
            let text = match (format, &lg) {
                (Format::Dot, _) => to_dot(&g, lg.as_ref()),
                (Format::Json, Some(lg)) => labeled_graph_to_json(lg)?,
                (Format::Json, None) => graph_to_json(&g)?,
            };
            Ok(Output { text, code: 0 })
        }
        Command::Verify(v) => run_verify(&ctx, v),
        Command::Search(s) => run_search(&ctx, s),
        Command::Extract(e) => run_extract(e),
        Command::Revalidate { certificate, graph } => run_revalidate(&ctx, &certificate, &graph),
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParams(_) | Error::Degenerate(_) | Error::VertexOutOfRange { .. } | Error::EmptySet(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok(output) => {
            let mut text = output.text;
            if !text.ends_with('\n') {
                text.push('\n');
            }
            let written = match &out {
                Some(path) => fs::write(path, text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(output.code)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { 3 } else { 1 })
        }
    }
}
