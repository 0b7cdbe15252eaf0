//! Subcommand implementations.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use oel::dataio::formats::{write_bitsets, write_dense, write_permutations};
use oel::dataio::{
    load_dataset, load_model, save_model, synth_remark1, BundleMeta, DataSpec, Dataset,
    InputFormat, KernelDesc, ModelBundle, OutputKind, Outputs,
};
use oel::decode::{parse_rankings, write_rankings, Ranking};
use oel::kernels::{KernelSpec, PrecomputedGram};
use oel::linalg::{DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS};
use oel::metrics::{format_table, format_tsv};
use oel::oel::EigMethod;
use oel::pipeline::{
    decode, evaluate_predictions, fit, test_weights, FitConfig, OutputColumns, Trained,
};
use oel::tuning::{self, grid_search_ssv, nested_cv, GridPoint, Metric, Problem, SearchSpace};
use oel::{seed, OelError, Result};
use toml::Value;

use crate::bench::{self, BenchConfig};
use crate::config::{parse_range, Config};

/// Shared run context.
pub struct Run {
    pub cfg: Config,
    pub out: PathBuf,
    pub quiet: bool,
}

fn io_err(path: &Path, e: std::io::Error) -> OelError {
    OelError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

impl Run {
    pub fn new(cfg: Config, out: PathBuf) -> Result<Self> {
        fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
        Ok(Self {
            cfg,
            out,
            quiet: false,
        })
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }

    fn root_seed(&mut self) -> Result<u64> {
        self.cfg.u64_or("seed", 0)
    }

    fn snapshot(&self, name: &str) -> Result<()> {
        self.cfg.write_snapshot(&self.out.join(name))
    }

    fn data_spec(&mut self) -> Result<DataSpec> {
        let input_format = InputFormat::parse(&self.cfg.str_or("data.input_format", "dense")?)?;
        let output_kind = OutputKind::parse(&self.cfg.str_or("data.output_kind", "dense")?)?;
        let mut spec = DataSpec::new(
            input_format,
            output_kind,
            self.cfg.path("data.train_inputs")?,
            self.cfg.path("data.train_outputs")?,
        );
        spec.unsup_outputs = self.cfg.opt_path("data.unsup_outputs")?;
        spec.test_inputs = self.cfg.opt_path("data.test_inputs")?;
        spec.test_outputs = self.cfg.opt_path("data.test_outputs")?;
        spec.test_ids = self.cfg.opt_path("data.test_ids")?;
        spec.candidates = self.cfg.opt_path("data.candidates")?;
        spec.candidate_ids = self.cfg.opt_path("data.candidate_ids")?;
        spec.candidate_lists = self.cfg.opt_path("data.candidate_lists")?;
        if let Some(r) = self.cfg.opt_str("data.train_rows")? {
            spec.train_rows = Some(parse_range("data.train_rows", &r)?);
        }
        if let Some(r) = self.cfg.opt_str("data.unsup_rows")? {
            spec.unsup_rows = Some(parse_range("data.unsup_rows", &r)?);
        }
        Ok(spec)
    }

    fn kernel(
        &mut self,
        side: &str,
        input_format: Option<InputFormat>,
    ) -> Result<(KernelSpec, KernelDesc)> {
        let default = match (side, input_format) {
            ("input", Some(InputFormat::Gram)) => "precomputed",
            ("input", _) => "gaussian",
            _ => "linear",
        };
        let kind = self.cfg.str_or(&format!("kernel.{side}.kind"), default)?;
        let sigma_key = format!("kernel.{side}.sigma2");
        let mut desc = KernelDesc {
            kind: kind.clone(),
            sigma2: None,
            path: None,
        };
        let spec = match kind.as_str() {
            "gaussian" => {
                let s = self.cfg.f64_or(&sigma_key, 1.0)?;
                desc.sigma2 = Some(s);
                KernelSpec::Gaussian { sigma2: s }
            }
            "gaussian_tanimoto" => {
                let s = self.cfg.f64_or(&sigma_key, 1.0)?;
                desc.sigma2 = Some(s);
                KernelSpec::GaussianTanimoto { sigma2: s }
            }
            "linear" => KernelSpec::Linear,
            "tanimoto" => KernelSpec::Tanimoto,
            "precomputed" if side == "input" => {
                if input_format != Some(InputFormat::Gram) {
                    return Err(OelError::param(
                        "kernel.input.kind",
                        "`precomputed` input kernel needs data.input_format = \"gram\"",
                    ));
                }
                // The Gram blocks are the data; the kernel itself is unused.
                KernelSpec::Linear
            }
            "precomputed" => {
                let path = self.cfg.path("kernel.output.path")?;
                desc.path = Some(path.display().to_string());
                KernelSpec::Precomputed(PrecomputedGram::new(
                    oel::dataio::dataset::read_matrix_any(&path)?,
                )?)
            }
            other => {
                return Err(OelError::param(
                    "kernel.kind",
                    format!("unknown kernel `{other}` for the {side} side"),
                ))
            }
        };
        if side == "input" && input_format == Some(InputFormat::Gram) && kind != "precomputed" {
            return Err(OelError::param(
                "kernel.input.kind",
                "Gram inputs need kernel.input.kind = \"precomputed\"",
            ));
        }
        spec.validate()?;
        Ok((spec, desc))
    }

    fn dataset(
        &mut self,
    ) -> Result<(
        Dataset,
        DataSpec,
        KernelSpec,
        KernelDesc,
        KernelSpec,
        KernelDesc,
    )> {
        let spec = self.data_spec()?;
        let ds = load_dataset(&spec)?;
        let (kx, dx) = self.kernel("input", Some(spec.input_format))?;
        let (ky, dy) = self.kernel("output", None)?;
        ds.check_output_kernel(&ky)?;
        log::info!(
            "loaded n = {}, m = {}, {} candidates",
            ds.n(),
            ds.m(),
            ds.candidates.len()
        );
        Ok((ds, spec, kx, dx, ky, dy))
    }

    fn eig_method(
        &mut self,
        root: u64,
    ) -> Result<(EigMethod, String, Option<usize>, Option<usize>)> {
        let method = self.cfg.str_or("oel.method", "exact")?;
        match method.as_str() {
            "exact" => Ok((EigMethod::Exact, method, None, None)),
            "randomized" => {
                let oversample = self.cfg.usize_or("oel.oversample", DEFAULT_OVERSAMPLE)?;
                let power_iters = self.cfg.usize_or("oel.power_iters", DEFAULT_POWER_ITERS)?;
                let seed = self
                    .cfg
                    .u64_or("oel.seed", seed::derive(root, seed::SKETCH))?;
                Ok((
                    EigMethod::Randomized {
                        oversample,
                        power_iters,
                        seed,
                    },
                    method,
                    Some(oversample),
                    Some(power_iters),
                ))
            }
            other => Err(OelError::param(
                "oel.method",
                format!("unknown method `{other}` (exact, randomized)"),
            )),
        }
    }

    fn model_dir(&mut self) -> Result<PathBuf> {
        Ok(self
            .cfg
            .opt_path("model")?
            .unwrap_or_else(|| self.out.join("model")))
    }

    pub fn fit(&mut self, iokr_only: bool) -> Result<()> {
        let root = self.root_seed()?;
        let (ds, _, kx, dx, ky, dy) = self.dataset()?;
        let lambda = self.cfg.f64_or("krr.lambda", 1e-3)?;
        let q = self.cfg.usize_or("krr.nystrom_q", 0)?;
        let anchor_seed = self
            .cfg
            .u64_or("krr.seed", seed::derive(root, seed::ANCHORS))?;
        let iokr_only = iokr_only || self.cfg.bool_or("iokr_only", false)?;
        self.cfg
            .record_value("iokr_only", Value::Boolean(iokr_only));
        let (eig, method, oversample, power_iters) = self.eig_method(root)?;
        let (c, p) = if iokr_only {
            (1.0, 1)
        } else {
            let default_c = if ds.m() == 0 { 1.0 } else { 0.5 };
            (
                self.cfg.f64_or("oel.c", default_c)?,
                self.cfg.usize_or("oel.p", 10)?,
            )
        };
        let fc = FitConfig {
            lambda,
            nystrom_q: (q > 0).then_some(q),
            anchor_seed,
            c,
            p,
            eig,
            iokr_only,
        };
        let trained = fit(&kx, &ky, &ds.x_train, &ds.y_train, &ds.y_unsup, &fc)?;
        let mut seeds = BTreeMap::new();
        seeds.insert("root".to_string(), root.to_string());
        if fc.nystrom_q.is_some() {
            seeds.insert(seed::ANCHORS.to_string(), anchor_seed.to_string());
        }
        if let EigMethod::Randomized { seed: s, .. } = eig {
            seeds.insert(seed::SKETCH.to_string(), s.to_string());
        }
        let bundle = ModelBundle {
            meta: BundleMeta {
                input_kernel: dx,
                output_kernel: dy,
                eig_method: method,
                oversample,
                power_iters,
                seeds,
                train_fingerprint: ds.fingerprint(),
            },
            krr: trained.krr,
            oel: trained.oel,
        };
        let dir = self.model_dir()?;
        let manifest = save_model(&bundle, &dir)?;
        if let Some(p_eff) = manifest.p {
            log::info!("learned a {p_eff}-dimensional output embedding");
        }
        self.snapshot("resolved_config.toml")?;
        self.say(&format!("model written to {}\n", dir.display()));
        Ok(())
    }

    fn kernel_from_desc(
        desc: &KernelDesc,
        side: &str,
        input_format: InputFormat,
    ) -> Result<KernelSpec> {
        let need = |s: Option<f64>| {
            s.ok_or_else(|| OelError::Bundle(format!("{side} kernel lacks sigma2")))
        };
        Ok(match desc.kind.as_str() {
            "gaussian" => KernelSpec::Gaussian {
                sigma2: need(desc.sigma2)?,
            },
            "gaussian_tanimoto" => KernelSpec::GaussianTanimoto {
                sigma2: need(desc.sigma2)?,
            },
            "linear" => KernelSpec::Linear,
            "tanimoto" => KernelSpec::Tanimoto,
            "precomputed" if side == "input" && input_format == InputFormat::Gram => {
                KernelSpec::Linear
            }
            "precomputed" => {
                let path = desc.path.as_ref().ok_or_else(|| {
                    OelError::Bundle("precomputed output kernel lacks a path".into())
                })?;
                KernelSpec::Precomputed(PrecomputedGram::new(
                    oel::dataio::dataset::read_matrix_any(Path::new(path))?,
                )?)
            }
            other => {
                return Err(OelError::Bundle(format!(
                    "unknown {side} kernel `{other}` in manifest"
                )))
            }
        })
    }

    pub fn predict(&mut self) -> Result<()> {
        let spec = self.data_spec()?;
        let ds = load_dataset(&spec)?;
        let dir = self.model_dir()?;
        let bundle = load_model(&dir)?;
        if bundle.meta.train_fingerprint != ds.fingerprint() {
            return Err(OelError::InvalidInput(format!(
                "training data differ from those the model in {} was fitted on",
                dir.display()
            )));
        }
        let kx = Self::kernel_from_desc(&bundle.meta.input_kernel, "input", spec.input_format)?;
        let ky = Self::kernel_from_desc(&bundle.meta.output_kernel, "output", spec.input_format)?;
        ds.check_output_kernel(&ky)?;
        let x_test = ds
            .x_test
            .as_ref()
            .ok_or_else(|| OelError::param("data.test_inputs", "predict needs test inputs"))?;
        let k = self.cfg.usize_or("predict.k", 10)?;
        let model = Trained {
            krr: bundle.krr,
            oel: bundle.oel,
        };
        let alpha = test_weights(&model.krr, &kx, &ds.x_train, x_test)?;
        let cands = OutputColumns::new(&ky, &ds.y_train, &ds.y_unsup, &ds.candidates)?;
        let k_eff = k.min(cands.len());
        let rankings = decode(
            &model,
            alpha.view(),
            &cands,
            k_eff,
            ds.candidate_lists.as_deref(),
        )?;
        let path = self.out.join("rankings.tsv");
        let mut buf = Vec::new();
        write_rankings(&mut buf, &ds.test_ids, &ds.candidate_ids, &rankings)
            .map_err(|e| io_err(&path, e))?;
        fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
        self.snapshot("resolved_config.toml")?;
        self.say(&format!(
            "rankings for {} queries written to {}\n",
            rankings.len(),
            path.display()
        ));
        Ok(())
    }

    pub fn evaluate(&mut self) -> Result<()> {
        let (ds, _, _, _, ky, _) = self.dataset()?;
        let truth = ds
            .y_test
            .as_ref()
            .ok_or_else(|| OelError::param("data.test_outputs", "evaluate needs test outputs"))?;
        let path = self
            .cfg
            .opt_path("evaluate.rankings")?
            .unwrap_or_else(|| self.out.join("rankings.tsv"));
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let lines = parse_rankings(&text, &path)?;
        let cand_pos: HashMap<&str, usize> = ds
            .candidate_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let query_pos: HashMap<&str, usize> = ds
            .test_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut rankings = vec![None; ds.test_ids.len()];
        for (no, line) in lines.iter().enumerate() {
            let parse_err = |reason: String| OelError::Parse {
                file: path.clone(),
                line: no + 1,
                reason,
            };
            let q = *query_pos
                .get(line.query_id.as_str())
                .ok_or_else(|| parse_err(format!("unknown query id `{}`", line.query_id)))?;
            let mut r = Ranking {
                indices: Vec::with_capacity(line.entries.len()),
                scores: Vec::with_capacity(line.entries.len()),
            };
            for (id, score) in &line.entries {
                let c = *cand_pos
                    .get(id.as_str())
                    .ok_or_else(|| parse_err(format!("unknown candidate id `{id}`")))?;
                r.indices.push(c);
                r.scores.push(*score);
            }
            rankings[q] = Some(r);
        }
        let rankings = rankings
            .into_iter()
            .enumerate()
            .map(|(q, r)| {
                r.ok_or_else(|| {
                    OelError::InvalidInput(format!("no ranking for query `{}`", ds.test_ids[q]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let reports = evaluate_predictions(&ky, &ds.candidates, &rankings, truth)?;
        self.say(&format_table(&reports));
        write_file(&self.out.join("metrics.tsv"), &format_tsv(&reports))?;
        self.snapshot("resolved_config.toml")
    }

    fn search_space(&mut self, ds: &Dataset, kx: &KernelSpec) -> Result<SearchSpace> {
        let mut space = SearchSpace::default_for(ds.n(), ds.m());
        if let Some(v) = self.cfg.opt_f64_list("tune.lambda")? {
            space.lambda = v;
        }
        if let Some(v) = self.cfg.opt_usize_list("tune.p")? {
            space.p = v;
        }
        if let Some(v) = self.cfg.opt_f64_list("tune.c")? {
            space.c = v;
        }
        if let Some(v) = self.cfg.opt_f64_list("tune.input_sigma2")? {
            space.input_sigma2 = v;
        }
        match self.cfg.opt_usize_list("tune.nystrom_q")? {
            Some(v) => space.nystrom_q = v,
            None => {
                let q = self.cfg.usize_or("krr.nystrom_q", 0)?;
                if q > 0 {
                    space.nystrom_q = vec![q];
                }
            }
        }
        if !space.input_sigma2.is_empty() && kx.sigma2().is_none() {
            return Err(OelError::param(
                "tune.input_sigma2",
                "the input kernel has no width",
            ));
        }
        self.cfg.record_f64_list("tune.lambda", &space.lambda);
        self.cfg.record_usize_list("tune.p", &space.p);
        self.cfg.record_f64_list("tune.c", &space.c);
        Ok(space)
    }

    fn apply_point(&mut self, point: &GridPoint, iokr_only: bool) {
        self.cfg
            .record_value("krr.lambda", Value::Float(point.lambda));
        self.cfg.record_value(
            "krr.nystrom_q",
            Value::Integer(point.nystrom_q.unwrap_or(0) as i64),
        );
        if let Some(s) = point.input_sigma2 {
            self.cfg
                .record_value("kernel.input.sigma2", Value::Float(s));
        }
        if !iokr_only {
            self.cfg
                .record_value("oel.p", Value::Integer(point.p as i64));
            self.cfg.record_value("oel.c", Value::Float(point.c));
        }
    }

    pub fn tune(&mut self, iokr_only: bool, share_krr: bool) -> Result<()> {
        let root = self.root_seed()?;
        let (ds, _, kx, _, ky, _) = self.dataset()?;
        let iokr_only = iokr_only || self.cfg.bool_or("iokr_only", false)?;
        self.cfg
            .record_value("iokr_only", Value::Boolean(iokr_only));
        let share_krr = share_krr || self.cfg.bool_or("tune.share_krr", false)?;
        self.cfg
            .record_value("tune.share_krr", Value::Boolean(share_krr));
        let (eig, ..) = self.eig_method(root)?;
        let metric = Metric::parse(&self.cfg.str_or("tune.metric", "mse")?)?;
        let protocol = self.cfg.str_or("tune.protocol", "ssv")?;
        let space = self.search_space(&ds, &kx)?;
        let problem = Problem {
            input_kernel: &kx,
            output_kernel: &ky,
            x: &ds.x_train,
            y: &ds.y_train,
            u: &ds.y_unsup,
            candidates: &ds.candidates,
            eig,
            iokr_only,
            share_krr,
            seed: root,
        };
        let (table, best) = match protocol.as_str() {
            "ssv" => {
                let reps = self.cfg.usize_or("tune.reps", 5)?;
                let ratio = self.cfg.f64_or("tune.ratio", 0.8)?;
                let res = grid_search_ssv(&problem, &space, reps, ratio, metric)?;
                self.say(&format!(
                    "best {} = {} at lambda = {}, p = {}, c = {}\n",
                    metric.name(),
                    res.best_score(),
                    res.best_params().lambda,
                    res.best_params().p,
                    res.best_params().c
                ));
                (
                    tuning::format_rows(&res.rows, metric),
                    res.best_params().clone(),
                )
            }
            "nested" => {
                let outer = self.cfg.usize_or("tune.outer", 5)?;
                let inner = self.cfg.usize_or("tune.inner", 4)?;
                let res = nested_cv(&problem, &space, outer, inner, metric)?;
                self.say(&format_table(std::slice::from_ref(&res.report)));
                // The setting selected by most outer folds (earliest on ties).
                let mut counts: Vec<(usize, &GridPoint)> = Vec::new();
                for f in &res.folds {
                    match counts.iter_mut().find(|(_, p)| **p == f.selected) {
                        Some(e) => e.0 += 1,
                        None => counts.push((1, &f.selected)),
                    }
                }
                let top = counts.iter().map(|(c, _)| *c).max().unwrap_or(0);
                let best = counts
                    .iter()
                    .find(|(c, _)| *c == top)
                    .map(|(_, p)| (*p).clone())
                    .expect("folds");
                write_file(
                    &self.out.join("nested_cv.tsv"),
                    &format_tsv(std::slice::from_ref(&res.report)),
                )?;
                (tuning::format_rows(&res.rows, metric), best)
            }
            other => {
                return Err(OelError::param(
                    "tune.protocol",
                    format!("unknown protocol `{other}` (ssv, nested)"),
                ))
            }
        };
        write_file(&self.out.join("tune_results.tsv"), &table)?;
        self.snapshot("resolved_config.toml")?;
        self.apply_point(&best, iokr_only);
        self.snapshot("best_config.toml")
    }

    pub fn bench(&mut self) -> Result<()> {
        let d = BenchConfig::default();
        let cfg = BenchConfig {
            n: self.cfg.usize_or("bench.n", d.n)?,
            p: self.cfg.usize_or("bench.p", d.p)?,
            candidates: match self.cfg.opt_usize_list("bench.candidates")? {
                Some(v) => v,
                None => {
                    self.cfg
                        .record_usize_list("bench.candidates", &d.candidates);
                    d.candidates
                }
            },
            queries: self.cfg.usize_or("bench.queries", d.queries)?,
            block: self.cfg.usize_or("bench.block", d.block)?,
            repeats: self.cfg.usize_or("bench.repeats", d.repeats)?,
            k: self.cfg.usize_or("predict.k", d.k)?,
            seed: seed::derive(self.root_seed()?, "bench"),
        };
        if cfg.n == 0 || cfg.p == 0 || cfg.queries == 0 || cfg.candidates.contains(&0) {
            return Err(OelError::param("bench", "sizes must be positive"));
        }
        let rows = bench::run(&cfg)?;
        let text = bench::format_rows(&rows);
        self.say(&text);
        write_file(&self.out.join("bench.tsv"), &text)?;
        self.snapshot("resolved_config.toml")
    }

    pub fn synth(&mut self) -> Result<()> {
        let root = self.root_seed()?;
        let n = self.cfg.usize_or("synth.n", 200)?;
        let m = self.cfg.usize_or("synth.m", 100)?;
        let n_test = self.cfg.usize_or("synth.n_test", 50)?;
        let sx2 = self.cfg.f64_or("synth.sigma_x2", 1.0)?;
        let sz2 = self.cfg.f64_or("synth.sigma_z2", 4.0)?;
        let ds = synth_remark1(n, m, n_test, sx2, sz2, seed::derive(root, seed::SYNTH))?;
        let dense = |o: &Outputs| match o {
            Outputs::Dense(y) => y.clone(),
            _ => unreachable!("synthetic outputs are dense"),
        };
        let features = |x: &oel::dataio::Inputs| match x {
            oel::dataio::Inputs::Features(f) => f.clone(),
            _ => unreachable!("synthetic inputs are features"),
        };
        let o = self.out.clone();
        write_dense(&o.join("train_inputs.csv"), &features(&ds.x_train))?;
        write_dense(&o.join("train_outputs.csv"), &dense(&ds.y_train))?;
        write_dense(&o.join("unsup_outputs.csv"), &dense(&ds.y_unsup))?;
        write_dense(&o.join("candidates.csv"), &dense(&ds.candidates))?;
        write_file(
            &o.join("candidate_ids.txt"),
            &(ds.candidate_ids.join("\n") + "\n"),
        )?;
        let mut data = vec![
            ("data.input_format", "\"dense\"".to_string()),
            ("data.output_kind", "\"dense\"".to_string()),
            ("data.train_inputs", "\"train_inputs.csv\"".to_string()),
            ("data.train_outputs", "\"train_outputs.csv\"".to_string()),
            ("data.unsup_outputs", "\"unsup_outputs.csv\"".to_string()),
            ("data.candidates", "\"candidates.csv\"".to_string()),
            ("data.candidate_ids", "\"candidate_ids.txt\"".to_string()),
        ];
        if let (Some(xt), Some(yt)) = (&ds.x_test, &ds.y_test) {
            write_dense(&o.join("test_inputs.csv"), &features(xt))?;
            write_dense(&o.join("test_outputs.csv"), &dense(yt))?;
            write_file(&o.join("test_ids.txt"), &(ds.test_ids.join("\n") + "\n"))?;
            data.push(("data.test_inputs", "\"test_inputs.csv\"".to_string()));
            data.push(("data.test_outputs", "\"test_outputs.csv\"".to_string()));
            data.push(("data.test_ids", "\"test_ids.txt\"".to_string()));
        }
        data.push(("kernel.input.kind", "\"linear\"".to_string()));
        data.push(("kernel.output.kind", "\"linear\"".to_string()));
        let mut text =
            String::from("# Synthetic supervised-benefit data; paths are relative to this file.\n");
        for (k, v) in data {
            text.push_str(&format!("{k} = {v}\n"));
        }
        write_file(&o.join("config.toml"), &text)?;
        self.snapshot("resolved_config.toml")?;
        self.say(&format!("synthetic dataset written to {}\n", o.display()));
        Ok(())
    }
}

/// Write outputs of any kind in their text format (used by tests and
/// conversion scripts).
pub fn write_outputs(path: &Path, outputs: &Outputs) -> Result<()> {
    match outputs {
        Outputs::Dense(y) => write_dense(path, y),
        Outputs::Bitsets { sets, .. } => write_bitsets(path, sets),
        Outputs::Permutations { perms, .. } => write_permutations(path, perms),
        Outputs::Indices(idx) => write_file(
            path,
            &idx.iter().map(|i| format!("{i}\n")).collect::<String>(),
        ),
    }
}
