use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use igk::geometry::{
    bbox_diagonal, corrupt_gaussian_mixture, corrupt_vertices_uniform, load_mesh, load_points, save_mesh,
    save_points, FileFormat, PointCloud, TriangleMesh,
};
use igk::gmmfit::{
    builtin_params, fit_kernel_gmm, optimal_scale_correction, shape_errors, FitConfig, FitTarget, GmmApprox,
    GmmLabel,
};
use igk::kernels::KernelParams;
use igk::meanshift::Kde;
use igk::metrics::{
    mean_angular_distance, mean_density, point_surface_distance, regularity, reports_csv, MetricReport,
};
use igk::projection::{
    diagnostics_csv, weights_full, weights_simple, weights_wlop, Eta, ProjectionConfig, Projector, Side,
    Weighting,
};
use igk::robustloss::{denoise_mesh, DenoiseConfig, Loss, NormalFilterConfig};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{
    Cli, Command, CorruptArgs, CorruptMode, DenoiseMeshArgs, DenoisePointsArgs, EtaArg, EvaluateArgs, Failure,
    FitKernelArgs, MeanShiftArgs, MetricArg, WeightingArg,
};

type Outcome = std::result::Result<(), Failure>;

/// Effective settings of a run, echoed as `#` lines.
struct Echo(Vec<(String, String)>);

impl Echo {
    fn new(cli: &Cli, command: &str) -> Self {
        let mut e = Echo(Vec::new());
        e.add("command", command);
        e.add("seed", cli.seed);
        e.add("absolute_units", cli.absolute_units);
        e
    }

    fn add(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn header(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
    }
}

pub fn run(cli: &Cli) -> Outcome {
    if cli.threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::DenoisePoints(a) => denoise_points(cli, a),
        Command::MeanShift(a) => run_mean_shift(cli, a),
        Command::FitKernel(a) => fit_kernel(cli, a),
        Command::DenoiseMesh(a) => run_denoise_mesh(cli, a),
        Command::Corrupt(a) => corrupt(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
    }
}

fn format_of(path: &Path) -> Result<FileFormat, Failure> {
    Ok(FileFormat::from_path(path)?)
}

fn read_points(path: &Path) -> Result<PointCloud, Failure> {
    Ok(load_points(path, format_of(path)?)?)
}

fn read_mesh(path: &Path) -> Result<TriangleMesh, Failure> {
    Ok(load_mesh(path, format_of(path)?)?)
}

fn write_text(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|source| {
        Failure::Lib(igk::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Length unit of user-facing sizes: 1% of the bounding box diagonal unless
/// absolute units are requested.
fn length_unit(cli: &Cli, cloud: &PointCloud) -> Result<f64, Failure> {
    if cli.absolute_units {
        Ok(1.0)
    } else {
        Ok(bbox_diagonal(cloud)? / 100.0)
    }
}

fn positive(name: &str, v: f64) -> Outcome {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn weighting(w: WeightingArg) -> Weighting {
    match w {
        WeightingArg::None => Weighting::None,
        WeightingArg::Wlop => Weighting::Wlop,
        WeightingArg::Simple => Weighting::Simple,
        WeightingArg::Full => Weighting::Full,
    }
}

/// Truncation used by the projection attraction term, so that mean shift
/// and projection with zero repulsion follow the same steps.
fn attraction_kernel(dim: usize, p: f64, sigma2: f64) -> Result<KernelParams, Failure> {
    let mut cfg = ProjectionConfig::new(1.0, 0.0, 0);
    cfg.p = p;
    cfg.sigma2 = sigma2;
    Ok(cfg.attraction_kernel(dim)?)
}

fn denoise_points(cli: &Cli, a: &DenoisePointsArgs) -> Outcome {
    positive("h", a.h)?;
    positive("cg-tol", a.cg_tol)?;
    let targets = read_points(&a.input)?;
    let h = a.h * length_unit(cli, &targets)?;
    let q0 = match (&a.init, a.n_projections) {
        (Some(path), _) => read_points(path)?,
        (None, Some(n)) => {
            if n == 0 || n > targets.len() {
                return Err(Failure::Usage(format!(
                    "--n-projections must lie in 1..={}, got {n}",
                    targets.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut idx = rand::seq::index::sample(&mut rng, targets.len(), n).into_vec();
            idx.sort_unstable();
            let pts: Vec<&[f64]> = idx.iter().map(|&i| targets.point(i)).collect();
            PointCloud::from_points(targets.dim(), &pts)?
        }
        (None, None) => targets.clone().without_weights(),
    };

    let mut config = ProjectionConfig::new(h, a.mu, a.iters);
    config.p = a.p;
    config.sigma2 = a.sigma2;
    config.cg_tol = a.cg_tol;
    config.weighting = weighting(a.weighting);
    config.eta = match a.eta {
        EtaArg::Lop => Eta::Lop,
        EtaArg::Wlop => Eta::Wlop,
    };
    config.validate()?;

    let mut echo = Echo::new(cli, "denoise-points");
    echo.add("input", a.input.display());
    echo.add("n_targets", targets.len());
    echo.add("n_projections", q0.len());
    echo.add("h", format!("{h:.17e}"));
    echo.add("mu", a.mu);
    echo.add("iters", a.iters);
    echo.add("p", a.p);
    echo.add("sigma2", a.sigma2);
    echo.add("weighting", format!("{:?}", a.weighting).to_lowercase());
    echo.add("eta", format!("{:?}", a.eta).to_lowercase());
    echo.add("cg_tol", a.cg_tol);

    let projector = Projector::new(&targets, config)?;
    if let Some(w) = projector.target_weights() {
        if let (Some(it), Some(res)) = (w.cg_iterations, w.residual) {
            println!("target weights: cg_iterations = {it}, cg_residual = {res:.3e}, clamped = {}", w.clamped);
            echo.add("cg_iterations", it);
            echo.add("cg_residual", format!("{res:.3e}"));
        }
    }
    let out = projector.run(&q0)?;
    save_points(&out.points, &a.output, format_of(&a.output)?)?;
    if let Some(last) = out.diagnostics.last() {
        info!("final mean step {:.3e}, sigma_q {:.4}", last.mean_step, last.sigma_q);
    }
    if let Some(path) = &a.diagnostics {
        write_text(path, &(echo.header() + &diagnostics_csv(&out.diagnostics)))?;
    }
    print!("{}", echo.header());
    Ok(())
}

fn run_mean_shift(cli: &Cli, a: &MeanShiftArgs) -> Outcome {
    positive("h", a.h)?;
    positive("step-tol", a.step_tol)?;
    if a.max_iters == 0 {
        return Err(Failure::Usage("--max-iters must be positive".into()));
    }
    let points = read_points(&a.input)?;
    let seeds = read_points(&a.seeds)?;
    if seeds.dim() != points.dim() {
        return Err(Failure::Usage(format!(
            "seeds have dimension {}, data {}",
            seeds.dim(),
            points.dim()
        )));
    }
    let h = a.h * length_unit(cli, &points)?;
    let kernel = attraction_kernel(points.dim(), a.p, a.sigma2)?;
    let kde = Kde::new(&points, h)?;

    let mut echo = Echo::new(cli, "mean-shift");
    echo.add("input", a.input.display());
    echo.add("seeds", a.seeds.display());
    echo.add("h", format!("{h:.17e}"));
    echo.add("p", a.p);
    echo.add("sigma2", a.sigma2);
    echo.add("max_iters", a.max_iters);
    echo.add("step_tol", a.step_tol);

    let mut finals = Vec::with_capacity(seeds.len());
    let mut traj_csv = String::from("run,t");
    for k in 0..points.dim() {
        let _ = write!(traj_csv, ",q{k}");
    }
    traj_csv.push_str(",density\n");
    for (run, q0) in seeds.points().enumerate() {
        let traj = kde.mean_shift_with(&kernel, &kernel, q0, a.max_iters, a.step_tol * h)?;
        info!("seed {run}: {} steps, {:?}", traj.steps(), traj.stop);
        for line in traj.to_csv().lines().skip(1) {
            let _ = writeln!(traj_csv, "{run},{line}");
        }
        finals.push(traj.last().to_vec());
    }
    let finals = PointCloud::from_points(points.dim(), &finals)?;
    if let Some(path) = &a.trajectory {
        write_text(path, &(echo.header() + &traj_csv))?;
    }
    match &a.out {
        Some(path) => save_points(&finals, path, format_of(path)?)?,
        None => {
            for q in finals.points() {
                let line: Vec<String> = q.iter().map(|c| format!("{c:.17e}")).collect();
                println!("{}", line.join(" "));
            }
        }
    }
    Ok(())
}

fn fit_kernel(cli: &Cli, a: &FitKernelArgs) -> Outcome {
    let mut echo = Echo::new(cli, "fit-kernel");
    let mut rows = Vec::new();
    let approx: GmmApprox = match &a.builtin {
        Some(name) => {
            let label: GmmLabel = name.parse()?;
            echo.add("builtin", label);
            let approx = builtin_params(label)?;
            let (linf, l1) = shape_errors(&approx, FitTarget::Lop, (0.0, 1.0));
            rows.push(MetricReport::new("linf", linf, "shape", 10_001));
            rows.push(MetricReport::new("l1", l1, "shape", 10_001));
            approx
        }
        None => {
            let config = FitConfig {
                n_samples: a.n,
                fix_sigma3: a.fix_sigma3,
                max_lm_iters: a.max_iters,
                seed: cli.seed,
                ..FitConfig::default()
            };
            echo.add("n", a.n);
            echo.add("max_iters", a.max_iters);
            if let Some(s) = a.fix_sigma3 {
                echo.add("fix_sigma3", s);
            }
            let fit = fit_kernel_gmm(&config)?;
            if !fit.converged {
                log::warn!("fit stopped after {} iterations without meeting the tolerance", fit.iterations);
            }
            rows.push(MetricReport::new("linf", fit.linf, "shape", 10_001));
            rows.push(MetricReport::new("l1", fit.l1, "shape", 10_001));
            rows.push(MetricReport::new("rms", fit.rms, "shape", a.n));
            rows.push(MetricReport::new("iterations", fit.iterations as f64, "count", 1));
            rows.push(MetricReport::new("converged", f64::from(u8::from(fit.converged)), "bool", 1));
            rows.push(MetricReport::new("weight_scale", fit.weight_scale, "factor", 1));
            fit.approx
        }
    };
    for d in 1..=3 {
        rows.push(MetricReport::new(format!("std_ratio_d{d}"), approx.std_ratio(Some(d)), "ratio", 1));
    }
    rows.push(MetricReport::new("std_ratio_dinf", approx.std_ratio(None), "ratio", 1));
    for d in 1..=3 {
        let sc = optimal_scale_correction(&approx, d)?;
        rows.push(MetricReport::new(format!("b_opt_d{d}"), sc.b_opt, "factor", 1));
        rows.push(MetricReport::new(format!("l1_kernel_d{d}"), sc.l1_before, "mass", 1));
    }
    write_text(&a.out, &approx.to_text())?;
    let report = echo.header() + &reports_csv(&rows);
    match &a.report {
        Some(path) => write_text(path, &report)?,
        None => print!("{report}"),
    }
    Ok(())
}

fn run_denoise_mesh(cli: &Cli, a: &DenoiseMeshArgs) -> Outcome {
    let mesh = read_mesh(&a.input)?;
    let reference = a.reference.as_deref().map(read_mesh).transpose()?;
    let config = DenoiseConfig {
        filter: NormalFilterConfig {
            iters: a.iters,
            sigma: a.sigma,
            radius_factor: a.radius_factor,
            loss: Loss::parse(&a.loss)?,
        },
        vertex_iters: a.vertex_iters,
        w: a.w,
    };
    let mut echo = Echo::new(cli, "denoise-mesh");
    echo.add("input", a.input.display());
    echo.add("loss", &a.loss);
    echo.add("iters", a.iters);
    echo.add("sigma", a.sigma);
    echo.add("radius_factor", a.radius_factor);
    echo.add("vertex_iters", a.vertex_iters);
    echo.add("w", a.w);

    let out = denoise_mesh(&mesh, &config, reference.as_ref())?;
    save_mesh(&out.mesh, &a.output, format_of(&a.output)?)?;
    let mut rows = vec![MetricReport::new("kept_input", out.kept_input as f64, "faces", mesh.n_faces())];
    if let Some(d) = out.d_angle {
        println!("d_angle = {d:.6}");
        rows.push(MetricReport::new("d_angle", d, "degrees", mesh.n_faces()));
    }
    if let Some(path) = &a.metrics {
        write_text(path, &(echo.header() + &reports_csv(&rows)))?;
    }
    Ok(())
}

fn corrupt(cli: &Cli, a: &CorruptArgs) -> Outcome {
    let in_format = format_of(&a.input)?;
    let out_format = format_of(&a.output)?;
    match a.mode {
        CorruptMode::UniformVertex => {
            if in_format == FileFormat::Xyz {
                return Err(Failure::Usage("uniform-vertex needs a mesh input (.ply or .obj)".into()));
            }
            let mesh = load_mesh(&a.input, in_format)?;
            let out = corrupt_vertices_uniform(&mesh, a.amplitude, cli.seed)?;
            save_mesh(&out, &a.output, out_format)?;
        }
        CorruptMode::GaussianMix => {
            let cloud = load_points(&a.input, in_format)?;
            let unit = length_unit(cli, &cloud)?;
            let out = corrupt_gaussian_mixture(
                &cloud,
                a.sigma_noise * unit,
                a.frac_noise,
                a.sigma_outlier * unit,
                a.frac_outlier,
                cli.seed,
            )?;
            save_points(&out, &a.output, out_format)?;
        }
    }
    Ok(())
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Outcome {
    let mut echo = Echo::new(cli, "evaluate");
    echo.add("metric", format!("{:?}", a.metric).to_lowercase());
    let need = |n: usize| -> Outcome {
        if a.inputs.len() == n {
            Ok(())
        } else {
            Err(Failure::Usage(format!("metric expects {n} input file(s), got {}", a.inputs.len())))
        }
    };
    let row = match a.metric {
        MetricArg::Regularity => {
            need(1)?;
            let q = read_points(&a.inputs[0])?;
            MetricReport::new("sigma_q", regularity(&q)?, "model", q.len())
        }
        MetricArg::Surface => {
            need(2)?;
            let x = read_points(&a.inputs[0])?;
            let mesh = read_mesh(&a.inputs[1])?;
            MetricReport::new("d_surface", point_surface_distance(&x, &mesh)?, "model", x.len())
        }
        MetricArg::Angle => {
            need(2)?;
            let m0 = read_mesh(&a.inputs[0])?;
            let m1 = read_mesh(&a.inputs[1])?;
            MetricReport::new("d_angle", mean_angular_distance(&m0, &m1)?, "degrees", m0.n_faces())
        }
        MetricArg::Density => {
            positive("h", a.h)?;
            let points = read_points(&a.inputs[0])?;
            let eval_set = match a.inputs.get(1) {
                Some(path) => read_points(path)?,
                None => points.clone(),
            };
            let h = a.h * length_unit(cli, &points)?;
            echo.add("h", format!("{h:.17e}"));
            echo.add("p", a.p);
            echo.add("sigma2", a.sigma2);
            echo.add("weighting", format!("{:?}", a.weighting).to_lowercase());
            let kernel = attraction_kernel(points.dim(), a.p, a.sigma2)?;
            let weights = match a.weighting {
                WeightingArg::None => None,
                WeightingArg::Wlop => Some(weights_wlop(&points, h, Side::Target)?.values),
                WeightingArg::Simple => Some(weights_simple(&points, h, Side::Target)?.values),
                WeightingArg::Full => Some(weights_full(&points, h, 1e-6, None)?.values),
            };
            let f = mean_density(&points, &kernel, h, weights.as_deref(), &eval_set)?;
            MetricReport::new("mean_density", f, "1/volume", eval_set.len())
        }
    };
    let report = echo.header() + &reports_csv(&[row]);
    match &a.out {
        Some(path) => write_text(path, &report)?,
        None => print!("{report}"),
    }
    Ok(())
}
