use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use axifem::fem::{ModeField, QuadPlan, SpaceKind, Vec3};
use axifem::io::{write_csv, write_volume_vtk, write_vtk, Cell, Domain, RunConfig, Table};
use axifem::manufactured::convergence_study;
use axifem::mesh::{classify_boundary, gen_lshape, CornerDescriptor, TriangleMesh};
use axifem::modal::form_a;
use axifem::singular::{compute_basis, eval_principal};
use axifem::solver::{imaginary_ratio, sample_3d, solve_all, FourierRhs, FourierSolution, SolveOptions};
use axifem::verify::CHECKS;
use axifem::{Error, ErrorClass, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

/// `println!` that stops quietly when stdout is closed (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "axifem", version, about = "Axisymmetric div-curl finite element solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Key-value configuration file (`key = value` per line)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Meridian domain: rectangle or lshape
    #[arg(long)]
    domain: Option<String>,
    /// Target mesh size
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Highest Fourier mode N (modes -N..=N)
    #[arg(long, short = 'n')]
    modes: Option<usize>,
    /// Field kind: electric or magnetic
    #[arg(long)]
    field: Option<String>,
    /// Right-hand side: azimuthal, transverse, band3, or table:<csv>
    #[arg(long)]
    rhs: Option<String>,
    /// Relative residual tolerance of the iterative solver
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Output directory
    #[arg(long, short = 'o', value_name = "DIR")]
    output: Option<PathBuf>,
    /// Any configuration key, e.g. `--set r_c=0.4` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the meridian mesh and report reentrant corners
    Meshgen(ConfigArgs),
    /// Compute and export the singular basis of one mode
    Singular {
        /// Fourier mode, |k| <= 2
        #[arg(long, allow_hyphen_values = true)]
        k: i32,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve every mode and export per-mode fields and a coefficient table
    Solve(ConfigArgs),
    /// Solve and export the synthesized field on a revolved grid
    Synthesize {
        /// Number of angular samples of the revolved grid
        #[arg(long, value_name = "T")]
        theta_samples: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Refinement study with closed-form smooth solutions on the unit square
    Convergence {
        /// Number of mesh levels, halving h each time
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Modes to study (repeatable); defaults to 0, 1, -1, 2, -2, 3
        #[arg(long, allow_hyphen_values = true)]
        k: Vec<i32>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the numerical self-check suite
    Verify {
        /// Run only these criteria (repeatable)
        #[arg(long)]
        only: Vec<usize>,
    },
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        put("domain", self.domain.clone());
        put("h", self.h.map(|x| x.to_string()));
        put("modes", self.modes.map(|x| x.to_string()));
        put("field", self.field.clone());
        put("rhs", self.rhs.clone());
        put("tol", self.tol.map(|x| x.to_string()));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("expected KEY=VALUE, got '{kv}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        cfg.apply(&map)?;
        Ok(cfg)
    }
}

fn field_name(kind: SpaceKind) -> &'static str {
    match kind {
        SpaceKind::Electric => "E",
        SpaceKind::Magnetic => "B",
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.output)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", cfg.output.display())))?;
    Ok(&cfg.output)
}

fn require_corner(corner: Option<CornerDescriptor>) -> Result<CornerDescriptor> {
    corner.ok_or_else(|| Error::InvalidInput("the singular basis needs a domain with a reentrant corner".into()))
}

fn meshgen(cfg: &RunConfig) -> Result<()> {
    let (mesh, _) = cfg.domain.mesh(cfg.h)?;
    let (_, corners) = classify_boundary(&mesh)?;
    let dir = out_dir(cfg)?;
    mesh.save(dir.join("mesh.txt"))?;
    write_vtk(&mesh, &[], &[], dir.join("mesh.vtk"))?;
    let mut table = Table::new(&["vertex", "r", "z", "interior_angle", "alpha", "reentrant"]);
    for c in &corners {
        table.push(vec![
            Cell::Num(c.corner_vertex as f64),
            Cell::Num(c.position[0]),
            Cell::Num(c.position[1]),
            Cell::Num(c.interior_angle),
            Cell::Num(c.alpha),
            Cell::Text(c.is_reentrant().to_string()),
        ]);
    }
    write_csv(&table, dir.join("corners.csv"))?;
    say!(
        "mesh: {} vertices, {} triangles, h = {:.4}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.h()
    );
    for c in &corners {
        say!(
            "corner r={} z={} interior_angle={:.6} alpha={:.6}",
            c.position[0], c.position[1], c.interior_angle, c.alpha
        );
    }
    Ok(())
}

fn principal_cells(mesh: &TriangleMesh, pp: &axifem::singular::PrincipalPart) -> Vec<Vec3> {
    (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.centroid(t);
            eval_principal(pp, c[0], c[1]).unwrap_or([Complex64::new(0.0, 0.0); 3])
        })
        .collect()
}

fn nodal_table(mesh: &TriangleMesh, field: &ModeField) -> Table {
    let mut t = Table::new(&["r", "z", "u_r_re", "u_r_im", "u_theta_re", "u_theta_im", "u_z_re", "u_z_im"]);
    for (p, v) in mesh.vertices.iter().zip(&field.values) {
        let mut row = vec![Cell::Num(p[0]), Cell::Num(p[1])];
        for c in v {
            row.push(Cell::Num(c.re));
            row.push(Cell::Num(c.im));
        }
        t.push(row);
    }
    t
}

fn singular(cfg: &RunConfig, k: i32) -> Result<()> {
    let (mesh, corner) = cfg.domain.mesh(cfg.h)?;
    let corner = require_corner(corner)?;
    let plan = QuadPlan::with_corners(&mesh, &[corner]);
    let basis = compute_basis(&mesh, &plan, &corner, k, cfg.kind, cfg.tol)?;
    let dir = out_dir(cfg)?;
    let stem = format!("singular_k{k}_{}", cfg.kind.as_str());
    let total = basis.nodal_total(&mesh);
    let cells = principal_cells(&mesh, &basis.principal);
    write_vtk(
        &mesh,
        &[("total", &total), ("regular", &basis.regular)],
        &[("principal", &cells)],
        dir.join(format!("{stem}.vtk")),
    )?;
    write_csv(&nodal_table(&mesh, &total), dir.join(format!("{stem}.csv")))?;

    // a_k(y, y) on this mesh and on two refinements
    let mut energy = Table::new(&["h", "n_vertices", "basis_energy", "iterations"]);
    for level in 0..3 {
        let h = cfg.h / f64::from(1u32 << level);
        let (m, c) = match cfg.domain {
            Domain::LShape(s) => gen_lshape(s, h)?,
            Domain::Rectangle { .. } => unreachable!("rectangles have no reentrant corner"),
        };
        let p = QuadPlan::with_corners(&m, &[c]);
        let b = if level == 0 {
            basis.clone()
        } else {
            compute_basis(&m, &p, &c, k, cfg.kind, cfg.tol)?
        };
        let e = form_a(&p, k, &b, &b).re;
        energy.push(vec![
            Cell::Num(h),
            Cell::Num(m.n_vertices() as f64),
            Cell::Num(e),
            Cell::Num(b.report.iterations as f64),
        ]);
        say!("h={h} a_k(y,y)={e:.10}");
    }
    write_csv(&energy, dir.join(format!("{stem}_energy.csv")))?;
    say!("singular basis k={k} {}: {} CG iterations", cfg.kind.as_str(), basis.report.iterations);
    Ok(())
}

fn full_solve(cfg: &RunConfig) -> Result<(TriangleMesh, FourierSolution)> {
    let (mesh, corner) = cfg.domain.mesh(cfg.h)?;
    let plan = match &corner {
        Some(c) => QuadPlan::with_corners(&mesh, &[*c]),
        None => QuadPlan::new(&mesh),
    };
    let rhs = FourierRhs::new(cfg.rhs_source()?, cfg.modes, cfg.theta_samples())?;
    let options = SolveOptions {
        tol: cfg.tol,
        ..Default::default()
    };
    let sol = solve_all(&mesh, &plan, corner.as_ref(), cfg.kind, &rhs, options)?;
    Ok((mesh, sol))
}

fn solve(cfg: &RunConfig) -> Result<()> {
    let (mesh, sol) = full_solve(cfg)?;
    let dir = out_dir(cfg)?;
    let name = field_name(cfg.kind);
    let mut table = Table::new(&["k", "c_re", "c_im", "iterations", "residual", "schur_re", "schur_im"]);
    for m in &sol.modes {
        let nodal = m.nodal(&mesh);
        write_vtk(&mesh, &[(name, &nodal)], &[], dir.join(format!("mode_{}.vtk", m.k)))?;
        let schur = m.schur.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        table.push(vec![
            Cell::Num(m.k as f64),
            Cell::Num(m.c.re),
            Cell::Num(m.c.im),
            Cell::Num(m.report.iterations as f64),
            Cell::Num(m.report.residual),
            Cell::Num(schur.re),
            Cell::Num(schur.im),
        ]);
    }
    write_csv(&table, dir.join("summary.csv"))?;
    say!("solved {} modes of the {} field", sol.modes.len(), cfg.kind.as_str());
    for m in &sol.modes {
        say!("k={:>3} C={:+.6e}{:+.6e}i residual={:.2e}", m.k, m.c.re, m.c.im, m.report.residual);
    }
    Ok(())
}

fn synthesize(cfg: &RunConfig, theta_samples: usize) -> Result<()> {
    let (mesh, sol) = full_solve(cfg)?;
    let samples = sample_3d(&sol, &mesh, theta_samples)?;
    let dir = out_dir(cfg)?;
    write_volume_vtk(&mesh, field_name(cfg.kind), &samples, dir.join("field_3d.vtk"))?;
    say!(
        "revolved grid: {} points, imaginary ratio {:.2e}",
        theta_samples * mesh.n_vertices(),
        imaginary_ratio(&samples)
    );
    Ok(())
}

fn convergence(cfg: &RunConfig, levels: usize, ks: &[i32]) -> Result<()> {
    if levels < 2 {
        return Err(Error::InvalidInput("a rate needs at least 2 levels".into()));
    }
    let hs: Vec<f64> = (0..levels).map(|l| cfg.h / f64::from(1u32 << l)).collect();
    let ks: Vec<i32> = if ks.is_empty() { vec![0, 1, -1, 2, -2, 3] } else { ks.to_vec() };
    let dir = out_dir(cfg)?;
    let mut errors = Table::new(&["k", "field", "h", "n_free", "l2_error", "energy_error", "iterations"]);
    let mut rates = Table::new(&["k", "field", "l2_rate", "energy_rate"]);
    for &k in &ks {
        let study = convergence_study(k, cfg.kind, &hs, cfg.tol)?;
        for l in &study.levels {
            errors.push(vec![
                Cell::Num(k as f64),
                Cell::Text(cfg.kind.as_str().into()),
                Cell::Num(l.h),
                Cell::Num(l.n_free as f64),
                Cell::Num(l.l2),
                Cell::Num(l.energy),
                Cell::Num(l.iterations as f64),
            ]);
        }
        rates.push(vec![
            Cell::Num(k as f64),
            Cell::Text(cfg.kind.as_str().into()),
            Cell::Num(study.l2_rate),
            Cell::Num(study.energy_rate),
        ]);
        say!(
            "k={k:>3} {}: L2 rate {:.3}, energy rate {:.3}",
            cfg.kind.as_str(),
            study.l2_rate,
            study.energy_rate
        );
    }
    write_csv(&errors, dir.join("convergence.csv"))?;
    write_csv(&rates, dir.join("rates.csv"))?;
    Ok(())
}

fn verify(only: &[usize]) -> Result<bool> {
    if let Some(&bad) = only.iter().find(|&&i| i == 0 || i > CHECKS.len()) {
        return Err(Error::InvalidInput(format!("no criterion {bad}; there are {}", CHECKS.len())));
    }
    let mut all = true;
    for (i, check) in CHECKS.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let outcome = check();
        say!("{outcome}");
        all &= outcome.passed;
    }
    Ok(all)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("AXIFEM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("AXIFEM_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn report(kind: &str, msg: &str) {
    let msg = msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    eprintln!("error kind={kind} msg=\"{}\"", msg.trim());
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Meshgen(c) => meshgen(&c.resolve()?)?,
        Command::Singular { k, cfg } => singular(&cfg.resolve()?, k)?,
        Command::Solve(c) => solve(&c.resolve()?)?,
        Command::Synthesize { theta_samples, cfg } => synthesize(&cfg.resolve()?, theta_samples)?,
        Command::Convergence { levels, k, cfg } => convergence(&cfg.resolve()?, levels, &k)?,
        Command::Verify { only } => return verify(&only),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            report("usage", first.trim_start_matches("error:"));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            report(ErrorClass::Numerical.as_str(), "verification failed");
            ExitCode::from(ErrorClass::Numerical.exit_code() as u8)
        }
        Err(e) => {
            let class = e.class();
            report(class.as_str(), &e.to_string());
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
