//! Command-line front end: validation, BoxMesh export, sampling,
//! tokenization round trips, evaluation, and SVG rendering.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use patternforge::boxmesh::{
    build_boxmesh, export_obj, import_obj, normalize_mesh, BoxMesh, BuildConfig, FaceLabel,
    SamplingSpec,
};
use patternforge::error::{Error, Result};
use patternforge::geom::Vec3;
use patternforge::mesh_tokens::{
    detokenize_mesh, dequantize_bin, quantize_mesh, read_mesh_token_file, tokenize_mesh_compressive,
    tokenize_mesh_direct, write_mesh_token_file, DEFAULT_MAX_TOKENS,
};
use patternforge::metrics::{evaluate_patterns, MetricReport};
use patternforge::pattern::{
    fmt_float, parse_pattern, parse_pattern_unchecked, serialize_pattern, validate_pattern,
    EdgeKind, Panel, SewingPattern,
};
use patternforge::pattern_tokens::{
    detokenize_pattern, read_token_file, tokenize_pattern, write_token_file, PatternVocab,
    QuantConfig,
};
use patternforge::sampling::{export_xyz, sample_surface};

#[derive(Parser)]
#[command(name = "patternforge", version, about = "Sewing-pattern toolkit")]
struct Cli {
    /// RNG seed for stochastic steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TokenKind {
    Pattern,
    MeshDirect,
    MeshCompressive,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a pattern file and print the finding report as JSON.
    Validate { pattern: PathBuf },
    /// Build the BoxMesh of a pattern and write it as OBJ.
    Boxmesh {
        pattern: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1600)]
        face_budget: usize,
        /// Target boundary segment length in cm (default: auto per panel).
        #[arg(long)]
        segment_cm: Option<f64>,
        /// Rescale into [-1, 1]^3 before writing.
        #[arg(long)]
        normalize: bool,
    },
    /// Sample points uniformly from an OBJ surface into an XYZ file.
    Sample {
        obj: PathBuf,
        #[arg(short, default_value_t = 4096)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a pattern or OBJ mesh into a token file.
    Tokenize {
        #[arg(long, value_enum)]
        kind: TokenKind,
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        resolution: u32,
        #[arg(long, default_value_t = 16)]
        block_size: u32,
        /// Quantize pattern parameters to 256 bins over [-150, 150] cm.
        #[arg(long)]
        quantize: bool,
        /// Comma-separated panel-name vocabulary for pattern tokens.
        #[arg(long, value_delimiter = ',')]
        names: Option<Vec<String>>,
    },
    /// Invert a token file back into a pattern or OBJ mesh.
    Detokenize {
        #[arg(long, value_enum)]
        kind: TokenKind,
        tokens: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop unmatched stitch slots with a warning instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Comma-separated panel-name vocabulary for pattern tokens.
        #[arg(long, value_delimiter = ',')]
        names: Option<Vec<String>>,
    },
    /// Evaluate predicted patterns against ground truth (files or directories).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10000)]
        points: usize,
        #[arg(long, default_value_t = 1600)]
        face_budget: usize,
    },
    /// Render the 2D panels of a pattern as SVG.
    Render {
        pattern: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn default_names() -> Vec<String> {
    [
        "front", "back", "sleeve_l", "sleeve_r", "collar", "cuff", "pocket", "hem",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Validate { pattern } => {
            let text = read(pattern)?;
            match parse_pattern_unchecked(&text) {
                Ok(p) => {
                    let report = validate_pattern(&p);
                    println!("{}", serde_json::to_string_pretty(&report.to_json())?);
                    Ok(if report.is_valid() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
                Err(e) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&serde_json::json!({
                            "valid": false,
                            "errors": [{"code": "parse", "message": e.to_string(), "location": pattern.display().to_string()}],
                            "warnings": [],
                        }))?
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
        Cmd::Boxmesh {
            pattern,
            out,
            face_budget,
            segment_cm,
            normalize,
        } => {
            let p = parse_pattern(&read(pattern)?)?;
            let cfg = BuildConfig {
                samples_per_edge: match segment_cm {
                    Some(s) => SamplingSpec::SegmentLength(*s),
                    None => SamplingSpec::Auto,
                },
                face_budget: *face_budget,
                ..BuildConfig::default()
            };
            let mut mesh = build_boxmesh(&p, &cfg)?;
            if *normalize {
                mesh = normalize_mesh(&mesh)?.0;
            }
            std::fs::write(out, export_obj(&mesh))?;
            if !cli.quiet {
                println!("{} vertices, {} faces", mesh.vertices.len(), mesh.faces.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sample { obj, n, out } => {
            if *n == 0 {
                return Err(Error::Config("sample count must be >= 1".into()));
            }
            let mesh = import_obj(&read(obj)?)?;
            let cloud = sample_surface(&mesh, *n, cli.seed)?;
            std::fs::write(out, export_xyz(&cloud))?;
            if !cli.quiet {
                println!("{} points", cloud.points.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Tokenize {
            kind,
            input,
            out,
            resolution,
            block_size,
            quantize,
            names,
        } => {
            let text = read(input)?;
            match kind {
                TokenKind::Pattern => {
                    let p = parse_pattern(&text)?;
                    let names = names.clone().unwrap_or_else(default_names);
                    let vocab = PatternVocab::new(&names)?;
                    let q = if *quantize {
                        QuantConfig::quantized(256)
                    } else {
                        QuantConfig::lossless()
                    };
                    let s = tokenize_pattern(&p, &vocab, &q)?;
                    std::fs::write(out, write_token_file(&s, &vocab))?;
                    if !cli.quiet {
                        println!("{} tokens", s.len());
                    }
                }
                TokenKind::MeshDirect | TokenKind::MeshCompressive => {
                    if *block_size == 0 || resolution % block_size != 0 {
                        return Err(Error::Config(format!(
                            "block size {block_size} does not divide resolution {resolution}"
                        )));
                    }
                    let mesh = import_obj(&text)?;
                    let q = quantize_mesh(&mesh, *resolution)?;
                    let s = if *kind == TokenKind::MeshDirect {
                        tokenize_mesh_direct(&q, DEFAULT_MAX_TOKENS)?
                    } else {
                        tokenize_mesh_compressive(&q, *block_size, DEFAULT_MAX_TOKENS)?
                    };
                    std::fs::write(out, write_mesh_token_file(&s))?;
                    if !cli.quiet {
                        println!("{} tokens", s.len());
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Detokenize {
            kind,
            tokens,
            out,
            lenient,
            names,
        } => {
            let text = read(tokens)?;
            match kind {
                TokenKind::Pattern => {
                    let names = names.clone().unwrap_or_else(default_names);
                    let vocab = PatternVocab::new(&names)?;
                    let s = read_token_file(&text, &vocab)?;
                    let p = detokenize_pattern(&s, &vocab, &QuantConfig::lossless(), *lenient)?;
                    std::fs::write(out, serialize_pattern(&p))?;
                }
                TokenKind::MeshDirect | TokenKind::MeshCompressive => {
                    let s = read_mesh_token_file(&text)?;
                    let q = detokenize_mesh(&s)?;
                    let mesh = BoxMesh {
                        vertices: q
                            .vertices
                            .iter()
                            .map(|b| {
                                Vec3::new(
                                    dequantize_bin(b[0], q.resolution),
                                    dequantize_bin(b[1], q.resolution),
                                    dequantize_bin(b[2], q.resolution),
                                )
                            })
                            .collect(),
                        face_labels: vec![FaceLabel::Panel(0); q.faces.len()],
                        faces: q.faces.clone(),
                    };
                    std::fs::write(out, export_obj(&mesh))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval {
            pred,
            gt,
            out,
            points,
            face_budget,
        } => cmd_eval(cli, pred, gt, out.as_deref(), *points, *face_budget),
        Cmd::Render { pattern, out } => {
            let p = parse_pattern(&read(pattern)?)?;
            if p.panels.is_empty() {
                return Err(Error::Invariant("pattern has no panels".into()));
            }
            std::fs::write(out, render_svg(&p))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn report_json(r: &MetricReport) -> serde_json::Value {
    serde_json::to_value(r).expect("report serializes")
}

fn mean_report(reports: &[MetricReport]) -> serde_json::Value {
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    serde_json::json!({
        "panel_iou": mean(|r| r.panel_iou),
        "panel_l2": mean(|r| r.panel_l2),
        "rot_l2": mean(|r| r.rot_l2),
        "transl_l2": mean(|r| r.transl_l2),
        "panels_acc": mean(|r| r.panels_acc),
        "edges_acc": mean(|r| r.edges_acc),
        "stitch_precision": mean(|r| r.stitch_precision),
        "cd_boxmesh": mean(|r| r.cd_boxmesh),
        "hd_boxmesh": mean(|r| r.hd_boxmesh),
        "unmatched_pred": mean(|r| r.unmatched_pred as f64),
        "unmatched_gt": mean(|r| r.unmatched_gt as f64),
        "n_samples": reports.len(),
    })
}

fn cmd_eval(
    cli: &Cli,
    pred: &Path,
    gt: &Path,
    out: Option<&Path>,
    points: usize,
    face_budget: usize,
) -> Result<ExitCode> {
    let cfg = BuildConfig {
        face_budget,
        ..BuildConfig::default()
    };
    let emit = |doc: &serde_json::Value| -> Result<()> {
        let text = serde_json::to_string_pretty(doc)?;
        if let Some(path) = out {
            std::fs::write(path, &text)?;
        }
        if !cli.quiet || out.is_none() {
            println!("{text}");
        }
        Ok(())
    };

    if pred.is_dir() != gt.is_dir() {
        return Err(Error::Config(
            "--pred and --gt must both be files or both be directories".into(),
        ));
    }
    if !pred.is_dir() {
        let p = parse_pattern(&read(pred)?)?;
        let g = parse_pattern(&read(gt)?)?;
        let r = evaluate_patterns(&p, &g, &cfg, points, cli.seed)?;
        emit(&report_json(&r))?;
        return Ok(ExitCode::SUCCESS);
    }

    let list = |dir: &Path| -> Result<BTreeMap<String, PathBuf>> {
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().map_or(false, |e| e == "json") {
                files.insert(
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    path,
                );
            }
        }
        Ok(files)
    };
    let preds = list(pred)?;
    let gts = list(gt)?;
    let missing_gt: Vec<&String> = preds.keys().filter(|k| !gts.contains_key(*k)).collect();
    let missing_pred: Vec<&String> = gts.keys().filter(|k| !preds.contains_key(*k)).collect();
    if !missing_gt.is_empty() || !missing_pred.is_empty() {
        for k in &missing_gt {
            eprintln!("missing ground truth for {k}");
        }
        for k in &missing_pred {
            eprintln!("missing prediction for {k}");
        }
        return Ok(ExitCode::from(1));
    }

    let names: Vec<&String> = preds.keys().collect();
    let eval_one = |name: &String| -> Result<(String, MetricReport)> {
        let p = parse_pattern(&read(&preds[name])?)?;
        let g = parse_pattern(&read(&gts[name])?)?;
        let r = evaluate_patterns(&p, &g, &cfg, points, cli.seed)?;
        Ok((name.clone(), r))
    };
    let results: Vec<Result<(String, MetricReport)>> = match std::env::var("PATTERNFORGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| {
                use rayon::prelude::*;
                names.par_iter().map(|n| eval_one(n)).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            names.par_iter().map(|n| eval_one(n)).collect()
        }
    };
    // Filename order keeps the aggregate deterministic under parallelism.
    let mut per_file = serde_json::Map::new();
    let mut reports = Vec::new();
    for res in results {
        let (name, r) = res?;
        per_file.insert(name, report_json(&r));
        reports.push(r);
    }
    emit(&serde_json::json!({
        "per_file": per_file,
        "aggregate": mean_report(&reports),
    }))?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// SVG rendering

fn stitch_color(k: usize) -> String {
    format!("hsl({}, 70%, 45%)", (k * 67) % 360)
}

fn panel_paths(pattern: &SewingPattern, pi: usize, panel: &Panel) -> String {
    let mut out = String::new();
    for (j, e) in panel.edges.iter().enumerate() {
        let a = panel.vertex(e.start);
        let b = panel.vertex(e.end);
        let mut d = format!("M {} {} ", fmt_float(a.x), fmt_float(a.y));
        match e.kind {
            EdgeKind::Line => d.push_str(&format!("L {} {}", fmt_float(b.x), fmt_float(b.y))),
            EdgeKind::Quad => d.push_str(&format!(
                "Q {} {} {} {}",
                fmt_float(e.control[0].x),
                fmt_float(e.control[0].y),
                fmt_float(b.x),
                fmt_float(b.y)
            )),
            EdgeKind::Cubic => d.push_str(&format!(
                "C {} {} {} {} {} {}",
                fmt_float(e.control[0].x),
                fmt_float(e.control[0].y),
                fmt_float(e.control[1].x),
                fmt_float(e.control[1].y),
                fmt_float(b.x),
                fmt_float(b.y)
            )),
            EdgeKind::Arc => {
                let arc = e.arc.as_ref().expect("arc edge has params");
                d.push_str(&format!(
                    "A {} {} 0 {} {} {} {}",
                    fmt_float(arc.radius),
                    fmt_float(arc.radius),
                    arc.large_arc as u8,
                    arc.sweep as u8,
                    fmt_float(b.x),
                    fmt_float(b.y)
                ));
            }
        }
        let stitch = pattern
            .stitches
            .iter()
            .position(|s| [s.first, s.second].iter().any(|r| r.panel == pi && r.edge == j));
        let stroke = match stitch {
            Some(k) => stitch_color(k),
            None => "#000".to_string(),
        };
        out.push_str(&format!(
            "    <path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"0.4\"/>\n"
        ));
    }
    out
}

fn render_svg(pattern: &SewingPattern) -> String {
    let n = pattern.panels.len();
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    // Cell size from the largest panel bbox plus margin.
    let mut extent = 1.0f64;
    let mut bboxes = Vec::new();
    for p in &pattern.panels {
        let (mut lo, mut hi) = (p.vertices[0], p.vertices[0]);
        for v in &p.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        extent = extent.max(hi.x - lo.x).max(hi.y - lo.y);
        bboxes.push((lo, hi));
    }
    let cell = extent * 1.4;
    let (w, h) = (cell * cols as f64, cell * rows as f64);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">\n",
        fmt_float(w),
        fmt_float(h)
    );
    for (pi, panel) in pattern.panels.iter().enumerate() {
        let (lo, hi) = bboxes[pi];
        let center = lo.add(hi).scale(0.5);
        let cx = cell * ((pi % cols) as f64 + 0.5);
        let cy = cell * ((pi / cols) as f64 + 0.5);
        // Flip y so panel frames read y-up inside the y-down SVG canvas.
        out.push_str(&format!(
            "  <g transform=\"translate({} {}) scale(1 -1) translate({} {})\">\n",
            fmt_float(cx),
            fmt_float(cy),
            fmt_float(-center.x),
            fmt_float(-center.y)
        ));
        out.push_str(&panel_paths(pattern, pi, panel));
        out.push_str("  </g>\n");
    }
    out.push_str("</svg>\n");
    out
}
