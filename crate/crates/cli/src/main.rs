//! `lark`: phantoms, sinograms, kernels and reconstructions from a TOML run
//! configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use lark_core::io::artifact::sidecar_path;
use lark_core::io::export::{image_csv, write_csv, write_pgm};
use lark_core::io::pipeline::Pipeline;
use lark_core::io::{
    append_manifest, load_image, load_kernel, load_matrix, load_sinogram, save_image, save_kernel, save_matrix,
    save_sinogram, ManifestEntry, RunConfig,
};
use lark_core::kernel::lark::kernel_norm;
use lark_core::kernel::toeplitz::continuous_toeplitz_spectrum;
use lark_core::phantom::ReconImage;
use lark_core::recon::{
    apply_kernel, clark_denoise, fbp_reconstruct, missing_cone_deficit, psnr, relative_error, tv_reconstruct,
};
use lark_core::{Error, Result};

#[derive(Parser)]
#[command(name = "lark", version, about = "Limited-angle CT with filtered SVD reconstruction kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterise the phantom on the reconstruction lattice.
    Phantom(ConfigArg),
    /// Simulate (noisy) data for the configured geometry.
    Sinogram(ConfigArg),
    /// Assemble the dense projection matrix.
    Matrix(ConfigArg),
    /// Compute the reconstruction kernel and the discrete spectrum.
    Kernel(ConfigArg),
    /// Reconstruct from the stored sinogram.
    Reconstruct {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, value_enum)]
        method: Method,
    },
    /// Discrete singular values of A and the continuous Toeplitz spectrum.
    Spectrum(ConfigArg),
    /// Kernel norm over a sequence of grid refinements.
    BenchH(ConfigArg),
    /// Compare two stored images.
    Metrics {
        image: PathBuf,
        reference: PathBuf,
        /// Also report the missing-cone deficit for this wedge (degrees).
        #[arg(long)]
        phi_missing_deg: Option<f64>,
        /// Append a manifest line in this directory.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fbp,
    Tv,
    Lark,
    Clark,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Fbp => "fbp",
            Method::Tv => "tv",
            Method::Lark => "lark",
            Method::Clark => "clark",
        }
    }
}

/// Exit status for each error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Domain(_) | Error::DimensionMismatch { .. } => 2,
        Error::Provenance(_) => 3,
        Error::NotPositiveDefinite { .. }
        | Error::QuadratureOrder { .. }
        | Error::Factorization(_)
        | Error::Divergence { .. }
        | Error::SpectrumOutOfRange { .. } => 4,
        Error::Io(_) | Error::Container(_) => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lark: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Session {
    pipe: Pipeline,
    out: PathBuf,
    hash: String,
    start: Instant,
}

impl Session {
    fn open(arg: &ConfigArg) -> Result<Self> {
        let start = Instant::now();
        let cfg = RunConfig::load(&arg.config)?;
        let base = arg.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let hash = cfg.hash_hex();
        let pipe = Pipeline::new(cfg, &base);
        let out = pipe.output_dir()?;
        Ok(Session { pipe, out, hash, start })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Fails with an IO error naming the missing upstream artifact.
    fn input(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if !p.exists() || !sidecar_path(&p).exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("missing input {}; run `lark {producer}` first", p.display()),
            )));
        }
        Ok(p)
    }

    fn finish(self, command: &str, outputs: &[&str], fields: Vec<(String, String)>) -> Result<()> {
        let entry = ManifestEntry {
            command: command.into(),
            config_hash: self.hash.clone(),
            wall_seconds: self.start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            fields,
        };
        append_manifest(&self.out, &entry)?;
        println!("{}", entry.line());
        Ok(())
    }

    fn write_image(&self, stem: &str, img: &ReconImage) -> Result<Vec<String>> {
        let names = [format!("{stem}.bin"), format!("{stem}.pgm"), format!("{stem}.csv")];
        save_image(&self.path(&names[0]), img)?;
        write_pgm(&self.path(&names[1]), img, None)?;
        std::fs::write(self.path(&names[2]), image_csv(img))?;
        Ok(names.to_vec())
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Phantom(arg) => {
            let s = Session::open(&arg)?;
            let img = s.pipe.reference_image()?;
            let names = s.write_image("phantom", &img)?;
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            s.finish("phantom", &refs, vec![])
        }
        Command::Sinogram(arg) => {
            let s = Session::open(&arg)?;
            let g = s.pipe.sinogram()?;
            save_sinogram(&s.path("sinogram.bin"), &g)?;
            let (angles, det) = (g.geometry.angles(), g.geometry.detectors());
            let q = g.geometry.n_detectors;
            let rows: Vec<Vec<f64>> = g
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| vec![angles[j / q], det[j % q], *v])
                .collect();
            write_csv(&s.path("sinogram.csv"), &["theta", "s", "value"], &rows)?;
            let d = &s.pipe.cfg.data;
            let fields = vec![
                ("noise_level".into(), d.noise_level.to_string()),
                ("seed".into(), d.seed.to_string()),
            ];
            s.finish("sinogram", &["sinogram.bin", "sinogram.csv"], fields)
        }
        Command::Matrix(arg) => {
            let s = Session::open(&arg)?;
            let a = s.pipe.projection()?;
            save_matrix(&s.path("matrix.bin"), &a)?;
            let fields = vec![("rows".into(), a.rows.to_string()), ("cols".into(), a.cols.to_string())];
            s.finish("matrix", &["matrix.bin"], fields)
        }
        Command::Kernel(arg) => {
            let s = Session::open(&arg)?;
            let (k, sigma) = s.pipe.kernel()?;
            let k = k.into_dense();
            save_kernel(&s.path("kernel.bin"), &k)?;
            write_sigma(&s.path("discrete_spectrum.csv"), &sigma)?;
            let fields = vec![
                ("gamma".into(), k.provenance.gamma.to_string()),
                ("filter".into(), format!("{:?}", k.provenance.filter)),
            ];
            s.finish("kernel", &["kernel.bin", "discrete_spectrum.csv"], fields)
        }
        Command::Reconstruct { cfg, method } => {
            let s = Session::open(&cfg)?;
            let g = load_sinogram(&s.input("sinogram.bin", "sinogram")?)?;
            let rc = &s.pipe.cfg.recon;
            let img = match method {
                Method::Fbp => fbp_reconstruct(&g, &s.pipe.lattice()?),
                Method::Tv => {
                    let a = load_matrix(&s.input("matrix.bin", "matrix")?)?;
                    tv_reconstruct(&a, &g, rc)?
                }
                Method::Lark => {
                    let k = load_kernel(&s.input("kernel.bin", "kernel")?)?;
                    apply_kernel(&k, &g)?
                }
                Method::Clark => {
                    let k = load_kernel(&s.input("kernel.bin", "kernel")?)?;
                    apply_kernel(&k, &clark_denoise(&g, &k, rc)?)?
                }
            };
            let stem = format!("recon_{}", method.name());
            let names = s.write_image(&stem, &img)?;
            let mut fields = vec![("method".into(), method.name().into())];
            // Metrics only make sense when the image lives on the reference lattice.
            let reference = s.pipe.reference_image()?;
            if reference.lattice() == img.lattice() {
                fields.push(("rel_error".into(), relative_error(&img, &reference)?.to_string()));
                fields.push(("psnr_db".into(), psnr(&img, &reference)?.to_string()));
            }
            if matches!(method, Method::Tv | Method::Clark) {
                fields.push(("lambda".into(), rc.lambda.to_string()));
                fields.push(("beta".into(), rc.beta.to_string()));
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            s.finish("reconstruct", &refs, fields)
        }
        Command::Spectrum(arg) => {
            let s = Session::open(&arg)?;
            let grid = s.pipe.grid()?;
            let sigma = s.pipe.decompose(&grid)?.sigma();
            write_sigma(&s.path("discrete_spectrum.csv"), &sigma)?;
            let geom = s.pipe.geometry()?;
            let spec = continuous_toeplitz_spectrum(s.pipe.cfg.spectrum.m_max, geom.phi_missing)?;
            let mut rows = Vec::new();
            for lvl in &spec.levels {
                for (l, sg) in lvl.sigma.iter().enumerate() {
                    rows.push((*sg, lvl.m, l));
                }
            }
            rows.sort_by(|a, b| b.0.total_cmp(&a.0));
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (sg, m, l))| vec![i as f64, m as f64, l as f64, sg])
                .collect();
            write_csv(&s.path("toeplitz_spectrum.csv"), &["index", "m", "l", "sigma"], &rows)?;
            s.finish("spectrum", &["discrete_spectrum.csv", "toeplitz_spectrum.csv"], vec![])
        }
        Command::BenchH(arg) => {
            let s = Session::open(&arg)?;
            let bh = s
                .pipe
                .cfg
                .bench_h
                .clone()
                .ok_or_else(|| Error::Config("bench-h needs a [bench_h] section".into()))?;
            let exponent = match bh.exponent {
                Some(e) => e,
                None => bh
                    .bases
                    .iter()
                    .find_map(|b| match b {
                        lark_core::basis::BasisSpec::Wendland { k, .. } => Some(2.0 * *k as f64 + 1.0),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Config("bench_h.exponent is required without a Wendland basis".into()))?,
            };
            let mut rows = Vec::new();
            for (i, spec) in bh.grids.iter().enumerate() {
                let basis = bh.bases[if bh.bases.len() == 1 { 0 } else { i }];
                let grid = lark_core::grid::make_grid(spec, basis)?;
                let d = s.pipe.decompose(&grid)?;
                let k = s.pipe.kernel_from(&grid, &d)?;
                let norm = kernel_norm(k.operator())?;
                let h = grid.density_h();
                rows.push(vec![grid.len() as f64, h, norm, norm * h.powf(exponent)]);
            }
            write_csv(&s.path("bench_h.csv"), &["n", "h", "kernel_norm", "scaled_norm"], &rows)?;
            s.finish("bench-h", &["bench_h.csv"], vec![("exponent".into(), exponent.to_string())])
        }
        Command::Metrics {
            image,
            reference,
            phi_missing_deg,
            manifest,
        } => {
            let start = Instant::now();
            let img = load_image(&image)?;
            let r = load_image(&reference)?;
            let mut fields = vec![
                ("rel_error".to_string(), relative_error(&img, &r)?.to_string()),
                ("psnr_db".to_string(), psnr(&img, &r)?.to_string()),
            ];
            if let Some(phi) = phi_missing_deg {
                let d = missing_cone_deficit(&img, &r, phi.to_radians())?;
                fields.push(("cone_deficit".into(), d.to_string()));
            }
            let entry = ManifestEntry {
                command: "metrics".into(),
                config_hash: "-".into(),
                wall_seconds: start.elapsed().as_secs_f64(),
                outputs: vec![],
                fields,
            };
            if let Some(dir) = manifest {
                std::fs::create_dir_all(&dir)?;
                append_manifest(&dir, &entry)?;
            }
            println!("{}", entry.line());
            Ok(())
        }
    }
}

fn write_sigma(path: &Path, sigma: &[f64]) -> Result<()> {
    let rows: Vec<Vec<f64>> = sigma.iter().enumerate().map(|(i, s)| vec![i as f64, *s]).collect();
    write_csv(path, &["index", "sigma"], &rows)
}
