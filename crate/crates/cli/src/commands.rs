use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use qcmsv_core::cmsv::{estimate_cmsv, CmsvRequest};
use qcmsv_core::ensembles::{generate, EnsembleSpec};
use qcmsv_core::kernels::SolverConfig;
use qcmsv_core::nsp::{ccp_verify, verify_linf};
use qcmsv_core::recovery::{
    bound_theorem1, bound_theorem2, required_s, solve_bp, solve_ds, solve_lasso, NoiseModel, Regime,
};
use qcmsv_core::ric::{estimate_ric, ric_bound};
use qcmsv_core::signal::{q_ratio_sparsity, read_matrix_csv, read_vector_csv, write_matrix_csv, write_vector_csv};
use qcmsv_core::{Direction, Error, MeasurementMatrix, QParam, Signal};

use crate::args::*;
use crate::error::CliError;
use crate::experiments::{run_experiment, ExperimentConfig, Overrides};
use crate::output::{caveat, to_json, write_file, Envelope};

type Out<'a> = &'a mut dyn Write;

pub fn dispatch(cli: &Cli, out: Out) -> Result<(), CliError> {
    match &cli.command {
        Command::GenMatrix(a) => gen_matrix(cli, a, out),
        Command::Sparsity(a) => sparsity(cli, a, out),
        Command::Cmsv(a) => cmsv(cli, a, out),
        Command::Verify(a) => verify(cli, a, out),
        Command::Recover(a) => recover(cli, a, out),
        Command::Ric(a) => ric(cli, a, out),
        Command::Bounds(a) => bounds(cli, a, out),
        Command::Experiment(a) => experiment(cli, a, out),
    }
}

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Output { path: "stdout".into(), message: e.to_string() })
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<MeasurementMatrix, CliError> {
    read_matrix_csv(open(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_vector(path: &Path) -> Result<Signal, CliError> {
    read_vector_csv(open(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Twelve significant digits for plain-text output; JSON keeps every bit.
fn human(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{v:.11e}").parse::<f64>().map(|r| r.to_string()).unwrap_or_else(|_| v.to_string())
}

fn envelope(config: Value, results: Vec<Value>, caveats: Vec<Value>) -> String {
    Envelope { config, results, caveats }.to_json()
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> qcmsv_core::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn gen_matrix(cli: &Cli, a: &GenMatrixArgs, out: Out) -> Result<(), CliError> {
    let mut spec = match a.ensemble {
        Ensemble::Gaussian => EnsembleSpec::gaussian(a.m, a.n, cli.seed),
        Ensemble::Bernoulli => EnsembleSpec::bernoulli(a.m, a.n, cli.seed),
        Ensemble::Hadamard => EnsembleSpec::hadamard_sub(a.m, a.n, cli.seed),
    };
    if a.normalize {
        spec = spec.normalized();
    }
    let matrix = generate(&spec)?;
    let text = csv_string(|w| write_matrix_csv(w, matrix.matrix()))?;
    let config = json!({ "command": "gen-matrix", "spec": spec });
    match &a.output {
        Some(path) => {
            write_file(path, &text)?;
            if cli.json {
                emit(out, &envelope(config, vec![json!({ "file": path.display().to_string(), "m": a.m, "n": a.n })], vec![]))
            } else {
                emit(out, &format!("wrote {} x {} matrix to {}\n", a.m, a.n, path.display()))
            }
        }
        None if cli.json => {
            let rows: Vec<Vec<f64>> = matrix.matrix().row_iter().map(|r| r.iter().cloned().collect()).collect();
            emit(out, &envelope(config, vec![json!({ "matrix": rows })], vec![]))
        }
        None => emit(out, &text),
    }
}

fn sparsity(cli: &Cli, a: &SparsityArgs, out: Out) -> Result<(), CliError> {
    let q = QParam::new(a.q)?;
    let x = load_vector(&a.input)?;
    let value = q_ratio_sparsity(x.as_slice(), q);
    if cli.json {
        let config = json!({ "command": "sparsity", "q": q, "input": a.input.display().to_string() });
        emit(out, &envelope(config, vec![json!({ "sparsity": value })], vec![]))
    } else {
        emit(out, &format!("{}\n", human(value)))
    }
}

fn cmsv(cli: &Cli, a: &CmsvArgs, out: Out) -> Result<(), CliError> {
    let q = QParam::new(a.q)?;
    let matrix = load_matrix(&a.input)?;
    let est = estimate_cmsv(&CmsvRequest::new(&matrix, q, a.s).restarts(a.restarts).seed(cli.seed))?;
    if cli.json {
        let config = json!({
            "command": "cmsv", "q": q, "s": a.s, "restarts": a.restarts,
            "seed": cli.seed, "input": a.input.display().to_string(),
        });
        let cav = caveat("cmsv", est.direction, "local-search minimum; the true CMSV is at most this value");
        emit(out, &envelope(config, vec![serde_json::to_value(&est).expect("estimate serializes")], vec![cav]))
    } else {
        emit(out, &format!("{}\n", human(est.value)))
    }
}

fn verify(cli: &Cli, a: &VerifyArgs, out: Out) -> Result<(), CliError> {
    let matrix = load_matrix(&a.input)?;
    let solver = SolverConfig::default().with_seed(cli.seed);
    let (res, method) = match a.method {
        VerifyMethod::Linf => (verify_linf(&matrix, &solver)?, "linf"),
        VerifyMethod::Ccp => (ccp_verify(&matrix, QParam::new(a.q)?, None, &solver)?, "ccp"),
    };
    if cli.json {
        let mut config = json!({ "command": "verify", "method": method, "seed": cli.seed, "input": a.input.display().to_string() });
        if method == "ccp" {
            config["q"] = json!(a.q);
        }
        let caveats = if method == "ccp" {
            vec![caveat("ccp", Direction::UpperBound, "local maximum; k_max may exceed the certified level")]
        } else {
            vec![]
        };
        emit(out, &envelope(config, vec![serde_json::to_value(&res).expect("result serializes")], caveats))
    } else {
        emit(
            out,
            &format!(
                "k_max = {}\nopt_value = {}\nbound = {}\ncertificate = {}\n",
                res.k_max,
                human(res.opt_value),
                human(res.bound),
                serde_json::to_value(res.certificate).expect("enum serializes").as_str().unwrap_or_default()
            ),
        )
    }
}

fn required(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required for this program")))
}

fn recover(cli: &Cli, a: &RecoverArgs, out: Out) -> Result<(), CliError> {
    let matrix = load_matrix(&a.input)?;
    let y = load_vector(&a.measurements)?;
    let solver = SolverConfig::default().with_seed(cli.seed);
    let (res, program, param) = match a.program {
        Program::Bp => {
            let eps = a.eps.unwrap_or(0.0);
            (solve_bp(&matrix, &y, eps, &solver)?, "bp", json!({ "eps": eps }))
        }
        Program::Ds => {
            let lambda = required("lambda", a.lambda)?;
            (solve_ds(&matrix, &y, lambda, &solver)?, "ds", json!({ "lambda": lambda }))
        }
        Program::Lasso => {
            let lambda = required("lambda", a.lambda)?;
            (solve_lasso(&matrix, &y, lambda, &solver)?, "lasso", json!({ "lambda": lambda }))
        }
    };
    if !res.converged {
        return Err(Error::NotConverged { context: Some(format!("{program} after {} iterations", res.iterations)) }.into());
    }
    let text = csv_string(|w| write_vector_csv(w, res.x_hat.as_slice()))?;
    if let Some(path) = &a.output {
        write_file(path, &text)?;
    }
    if cli.json {
        let config = json!({
            "command": "recover", "program": program, "parameters": param,
            "input": a.input.display().to_string(), "measurements": a.measurements.display().to_string(),
        });
        let result = json!({
            "x_hat": res.x_hat, "objective": res.objective,
            "iterations": res.iterations, "converged": res.converged,
        });
        emit(out, &envelope(config, vec![result], vec![]))
    } else if a.output.is_none() {
        emit(out, &text)
    } else {
        emit(out, &format!("objective = {}\niterations = {}\n", human(res.objective), res.iterations))
    }
}

fn ric(cli: &Cli, a: &RicArgs, out: Out) -> Result<(), CliError> {
    let matrix = load_matrix(&a.input)?;
    let est = estimate_ric(&matrix, a.k, a.samples, cli.seed)?;
    let bound = match a.q {
        Some(q) => match ric_bound(est.delta, a.k, q, a.eps) {
            Ok(b) => Some(b),
            Err(Error::NotApplicable(_)) => None,
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    if cli.json {
        let config = json!({
            "command": "ric", "k": a.k, "samples": a.samples, "seed": cli.seed,
            "q": a.q, "eps": a.eps, "input": a.input.display().to_string(),
        });
        let mut result = serde_json::to_value(&est).expect("estimate serializes");
        if a.q.is_some() {
            result["ric_bound"] = json!(bound);
        }
        let cav = caveat("ric", est.direction, "sampled maximum; the true RIC is at least this value");
        emit(out, &envelope(config, vec![result], vec![cav]))
    } else {
        let mut text = format!("delta_2k = {}\n", human(est.delta));
        if a.q.is_some() {
            match bound {
                Some(b) => text.push_str(&format!("ric_bound = {}\n", human(b))),
                None => text.push_str("ric_bound = not applicable (delta_2k >= sqrt(2) - 1)\n"),
            }
        }
        emit(out, &text)
    }
}

fn bounds(cli: &Cli, a: &BoundsArgs, out: Out) -> Result<(), CliError> {
    let q = QParam::new(a.q)?;
    let matrix = load_matrix(&a.input)?;
    let noise = match a.program {
        Program::Bp => NoiseModel::L2Ball { eps: required("eps", a.eps)? },
        Program::Ds => NoiseModel::CorrelatedInf { lambda_sigma: required("lambda", a.lambda)? },
        Program::Lasso => NoiseModel::LassoPen {
            lambda_sigma: required("lambda", a.lambda)?,
            kappa: required("kappa", a.kappa)?,
        },
    };
    noise.validate()?;
    let regime = match a.regime {
        RegimeArg::Sparse => Regime::ExactSparse,
        RegimeArg::Compressible => Regime::Compressible,
    };
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let s = required_s(&noise, regime, a.k, q).min(matrix.ncols() as f64);
    let est = estimate_cmsv(&CmsvRequest::new(&matrix, q, s).restarts(a.restarts).seed(cli.seed))?;
    let report = match regime {
        Regime::ExactSparse => bound_theorem1(&est, a.k, q, noise)?,
        Regime::Compressible => bound_theorem2(&est, a.k, q, noise, required("sigma-k", a.sigma_k)?)?,
    };
    if cli.json {
        let config = json!({
            "command": "bounds", "q": q, "k": a.k, "noise": noise, "regime": regime,
            "restarts": a.restarts, "seed": cli.seed, "input": a.input.display().to_string(),
        });
        let caveats = report
            .caveat_flags
            .iter()
            .map(|c| json!({ "source": "bounds", "flag": c }))
            .chain([caveat("cmsv", est.direction, "rho is a local-search value, so the bound may be optimistic")])
            .collect();
        emit(out, &envelope(config, vec![serde_json::to_value(&report).expect("report serializes")], caveats))
    } else {
        let mut text = format!(
            "required_s = {}\nrho = {}\nbound_lq = {}\nbound_l1 = {}\n",
            human(report.required_s),
            human(report.rho_used.value),
            human(report.bound_lq),
            human(report.bound_l1)
        );
        if let (Some(lq), Some(l1)) = (report.sharpened_lq, report.sharpened_l1) {
            text.push_str(&format!("sharpened_lq = {}\nsharpened_l1 = {}\n", human(lq), human(l1)));
        }
        emit(out, &text)
    }
}

fn experiment(cli: &Cli, a: &ExperimentArgs, out: Out) -> Result<(), CliError> {
    let overrides = Overrides {
        draws: a.draws,
        restarts: a.restarts,
        n: a.n,
        m_list: a.m_list.clone(),
        q_list: a.q_list.clone(),
        s_list: a.s_list.clone(),
        k_list: a.k_list.clone(),
        ric_samples: a.ric_samples,
        eps: a.eps,
        full_grid: a.full_grid,
    };
    let cfg = ExperimentConfig::defaults(a.name, cli.seed).with_overrides(&overrides)?;
    let written = run_experiment(&cfg, &a.out_dir)?;
    if cli.json {
        let paths: Vec<String> = written.data.iter().map(|p| p.display().to_string()).collect();
        emit(
            out,
            &to_json(&json!({
                "manifest": written.manifest.display().to_string(),
                "timing": written.timing.display().to_string(),
                "data": paths,
            })),
        )
    } else {
        let mut text = String::new();
        for p in &written.data {
            text.push_str(&format!("{}\n", p.display()));
        }
        text.push_str(&format!("{}\n{}\n", written.manifest.display(), written.timing.display()));
        emit(out, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::human;

    #[test]
    fn plain_text_rounds_away_representation_noise() {
        assert_eq!(human(49.0 / 25.0 + 2e-16), "1.96");
        assert_eq!(human(1.0), "1");
        assert_eq!(human(f64::INFINITY), "inf");
        assert_eq!(human(0.1234567890123456), "0.123456789012");
    }
}
