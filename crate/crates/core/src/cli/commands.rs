use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::format::format_real;
use super::{
    parse_encoding, parse_function, parse_modulus, ApproxArgs, BenchArgs, CheckArgs, CliError,
    Command, CompileArgs, OutputFormat, SoundnessArgs, WitnessArgs, EXIT_FAILED, EXIT_OK,
};
use crate::field::{sample_challenge, FieldElement, PrimeModulus};
use crate::matmul::{
    exhaustive_challenge_scan, generate_matmul_witness, soundness_trial, synthesize_matmul,
    Encoding, MatMulSpec, SoundnessBound, Tamper, VisibilityPolicy, EXHAUSTIVE_MAX_MODULUS,
};
use crate::matrix::FieldMatrix;
use crate::nonlinear::{reference, run_gadget, Function};
use crate::r1cs::{Assignment, R1csInstance};

pub(super) fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Compile(a) => compile(a, stdout),
        Command::Witness(a) => witness(a, stdout),
        Command::Check(a) => check(a, stdout),
        Command::Bench(a) => bench(a, stdout),
        Command::Soundness(a) => soundness(a, stdout),
        Command::Approx(a) => approx(a, stdout),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Header plus rows, comma separated, `\n` line endings.
fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn challenge_for(
    encoding: Encoding,
    seed: Option<&str>,
    m: &PrimeModulus,
) -> Result<Option<FieldElement>, CliError> {
    if !encoding.uses_challenge() {
        return Ok(None);
    }
    let seed = seed.filter(|s| !s.is_empty()).ok_or_else(|| {
        CliError::Usage(format!(
            "encoding {encoding} requires a nonempty --challenge-seed"
        ))
    })?;
    Ok(Some(
        sample_challenge(seed.as_bytes(), m).map_err(|e| CliError::Usage(e.to_string()))?,
    ))
}

#[derive(Serialize)]
struct CompileStats {
    encoding: String,
    a: usize,
    n: usize,
    b: usize,
    n_constraints: usize,
    n_variables: usize,
    n_public: usize,
    left_wire_count: usize,
    a_nonzeros: usize,
    b_nonzeros: usize,
    c_nonzeros: usize,
    product_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    challenge: Option<String>,
}

fn compile(args: CompileArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let m = parse_modulus(&args.modulus)?;
    let encoding = parse_encoding(&args.encoding)?;
    let visibility = VisibilityPolicy::from_public_list(&args.public).map_err(CliError::Usage)?;
    let mut spec = MatMulSpec::new(&m, args.dims.a, args.dims.n, args.dims.b, encoding)
        .with_visibility(visibility);
    spec.challenge = challenge_for(encoding, args.challenge_seed.as_deref(), &m)?;
    spec.validate()?;

    let circuit = synthesize_matmul(&spec)?;
    let mut meta = circuit.instance.metadata().clone();
    if let (true, Some(seed)) = (encoding.uses_challenge(), &args.challenge_seed) {
        meta.insert("challenge_seed".into(), seed.clone());
    }
    let instance = circuit.instance.with_metadata(meta);
    if let Some(path) = &args.out {
        write_file(path, &instance.to_json())?;
    }
    let st = instance.stats();
    let stats = CompileStats {
        encoding: encoding.name().into(),
        a: spec.a,
        n: spec.n,
        b: spec.b,
        n_constraints: st.n_constraints,
        n_variables: st.n_variables,
        n_public: st.n_public,
        left_wire_count: st.left_wire_count,
        a_nonzeros: st.a_nonzeros,
        b_nonzeros: st.b_nonzeros,
        c_nonzeros: st.c_nonzeros,
        product_rows: st.product_rows,
        challenge: spec.challenge.as_ref().map(FieldElement::to_decimal),
    };
    let text = match args.format {
        OutputFormat::Json => to_json(&stats),
        OutputFormat::Csv => to_csv(
            &[
                "encoding",
                "a",
                "n",
                "b",
                "n_constraints",
                "n_variables",
                "n_public",
                "left_wire_count",
                "a_nonzeros",
                "b_nonzeros",
                "c_nonzeros",
                "product_rows",
            ],
            &[vec![
                stats.encoding.clone(),
                stats.a.to_string(),
                stats.n.to_string(),
                stats.b.to_string(),
                stats.n_constraints.to_string(),
                stats.n_variables.to_string(),
                stats.n_public.to_string(),
                stats.left_wire_count.to_string(),
                stats.a_nonzeros.to_string(),
                stats.b_nonzeros.to_string(),
                stats.c_nonzeros.to_string(),
                stats.product_rows.to_string(),
            ]],
        ),
    };
    emit(&None, stdout, &text)?;
    Ok(EXIT_OK)
}

fn load_instance(path: &Path) -> Result<R1csInstance, CliError> {
    R1csInstance::from_json(&read(path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_assignment(path: &Path) -> Result<Assignment, CliError> {
    Assignment::from_json(&read(path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path, m: &PrimeModulus) -> Result<FieldMatrix, CliError> {
    FieldMatrix::from_json(&read(path)?, m)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn witness(args: WitnessArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let instance = load_instance(&args.instance)?;
    let m = instance.modulus().clone();
    let spec = MatMulSpec::from_metadata(&m, instance.metadata())
        .map_err(|e| CliError::Io(format!("{}: {e}", args.instance.display())))?;
    let x = load_matrix(&args.x, &m)?;
    let w = load_matrix(&args.w, &m)?;
    let (assignment, y) = generate_matmul_witness(&spec, &x, &w)?;

    let rebuilt = synthesize_matmul(&spec)?.instance;
    if rebuilt.a() != instance.a()
        || rebuilt.b() != instance.b()
        || rebuilt.c() != instance.c()
        || rebuilt.n_public() != instance.n_public()
    {
        return Err(CliError::Io(format!(
            "{}: constraints do not match the instance metadata",
            args.instance.display()
        )));
    }
    if !instance.is_satisfied(&assignment)?.satisfied {
        return Err(CliError::Failed(
            "generated assignment does not satisfy the instance".into(),
        ));
    }
    write_file(&args.assignment, &assignment.to_json())?;
    write_file(&args.out, &y.to_json())?;
    emit(
        &None,
        stdout,
        &format!("wrote {} values\n", assignment.len()),
    )?;
    Ok(EXIT_OK)
}

fn check(args: CheckArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let instance = load_instance(&args.instance)?;
    let assignment = load_assignment(&args.assignment)?;
    let report = instance.is_satisfied(&assignment)?;
    match report.first_failing_row {
        None => {
            emit(&None, stdout, "satisfied\n")?;
            Ok(EXIT_OK)
        }
        Some(row) => {
            emit(
                &None,
                stdout,
                &format!("unsatisfied: first failing row {row}\n"),
            )?;
            Ok(EXIT_FAILED)
        }
    }
}

fn parse_sweep(s: &str) -> Result<Vec<(usize, usize, usize)>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let dims: Vec<usize> = item
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("bad sweep entry {item:?} (expected AxNxB)")))?;
        match dims[..] {
            [a, n, b] if a > 0 && n > 0 && b > 0 => out.push((a, n, b)),
            _ => {
                return Err(CliError::Usage(format!(
                    "bad sweep entry {item:?} (expected AxNxB)"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty sweep".into()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct BenchRow {
    a: usize,
    n: usize,
    b: usize,
    encoding: String,
    n_constraints: usize,
    n_variables: usize,
    left_wires: usize,
    a_nonzeros: usize,
    b_nonzeros: usize,
    c_nonzeros: usize,
    product_rows: usize,
    ratio_to_crpc_psq: String,
}

fn bench(args: BenchArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let m = parse_modulus(&args.modulus)?;
    let sweep = parse_sweep(&args.sweep)?;
    let encodings = match &args.encodings {
        None => Encoding::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(parse_encoding)
            .collect::<Result<Vec<_>, _>>()?,
    };
    if encodings.is_empty() {
        return Err(CliError::Usage("no encodings selected".into()));
    }
    let mut rows = Vec::new();
    for &(a, n, b) in &sweep {
        for &e in &encodings {
            let mut spec = MatMulSpec::new(&m, a, n, b, e);
            spec.challenge = challenge_for(e, Some(&args.challenge_seed), &m)?;
            let st = synthesize_matmul(&spec)?.instance.stats();
            let reference_rows = Encoding::CrpcPsq.constraint_count(a, n, b);
            rows.push(BenchRow {
                a,
                n,
                b,
                encoding: e.name().into(),
                n_constraints: st.n_constraints,
                n_variables: st.n_variables,
                left_wires: st.left_wire_count,
                a_nonzeros: st.a_nonzeros,
                b_nonzeros: st.b_nonzeros,
                c_nonzeros: st.c_nonzeros,
                product_rows: st.product_rows,
                ratio_to_crpc_psq: format_real(st.product_rows as f64 / reference_rows as f64),
            });
        }
    }
    let text = match args.format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(
            &[
                "a",
                "n",
                "b",
                "encoding",
                "n_constraints",
                "n_variables",
                "left_wires",
                "a_nonzeros",
                "b_nonzeros",
                "c_nonzeros",
                "product_rows",
                "ratio_to_crpc_psq",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.a.to_string(),
                        r.n.to_string(),
                        r.b.to_string(),
                        r.encoding.clone(),
                        r.n_constraints.to_string(),
                        r.n_variables.to_string(),
                        r.left_wires.to_string(),
                        r.a_nonzeros.to_string(),
                        r.b_nonzeros.to_string(),
                        r.c_nonzeros.to_string(),
                        r.product_rows.to_string(),
                        r.ratio_to_crpc_psq.clone(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(&args.out, stdout, &text)?;
    Ok(EXIT_OK)
}

fn parse_tamper(args: &SoundnessArgs, m: &PrimeModulus) -> Result<Tamper, CliError> {
    let entries = if args.tamper_entries.is_empty() {
        vec!["0,0".to_string()]
    } else {
        args.tamper_entries.clone()
    };
    let deltas = if args.tamper_deltas.is_empty() {
        vec![1]
    } else {
        args.tamper_deltas.clone()
    };
    if deltas.len() != 1 && deltas.len() != entries.len() {
        return Err(CliError::Usage(format!(
            "{} tamper entries but {} deltas",
            entries.len(),
            deltas.len()
        )));
    }
    let mut out = Vec::with_capacity(entries.len());
    for (idx, e) in entries.iter().enumerate() {
        let bad = || CliError::Usage(format!("bad --tamper-entry {e:?} (expected r,c)"));
        let (r, c) = e.split_once(',').ok_or_else(bad)?;
        let (r, c): (usize, usize) = (
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        );
        if r >= args.dims.a || c >= args.dims.b {
            return Err(CliError::Usage(format!(
                "tamper entry ({r}, {c}) outside the {}x{} output",
                args.dims.a, args.dims.b
            )));
        }
        let d = deltas[if deltas.len() == 1 { 0 } else { idx }];
        let delta = FieldElement::from_i64(d, m)
            .map_err(|e| CliError::Usage(format!("--tamper-delta: {e}")))?;
        out.push(((r, c), delta));
    }
    Ok(Tamper::new(out)?)
}

#[derive(Serialize)]
struct ExhaustiveReport {
    mode: &'static str,
    encoding: String,
    a: usize,
    n: usize,
    b: usize,
    modulus: String,
    challenges: u64,
    passing: Vec<u64>,
    passing_count: usize,
    bound: SoundnessBound,
    within_bound: bool,
}

#[derive(Serialize)]
struct StatisticalReport {
    mode: &'static str,
    encoding: String,
    a: usize,
    n: usize,
    b: usize,
    modulus: String,
    seed: u64,
    trials: u64,
    detections: u64,
    undetected: u64,
    bound: SoundnessBound,
    within_bound: bool,
}

fn soundness(args: SoundnessArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let m = parse_modulus(&args.modulus)?;
    let encoding = parse_encoding(&args.encoding)?;
    if !encoding.uses_challenge() {
        return Err(CliError::Usage(format!(
            "soundness needs crpc or crpc-psq, got {encoding}"
        )));
    }
    let (a, n, b) = (args.dims.a, args.dims.n, args.dims.b);
    if a == 0 || n == 0 || b == 0 {
        return Err(CliError::Usage("dimensions must be positive".into()));
    }
    let tamper = parse_tamper(&args, &m)?;

    let (text, ok) = if args.exhaustive {
        if !matches!(m.to_u64(), Some(p) if p <= EXHAUSTIVE_MAX_MODULUS) {
            return Err(CliError::Usage(format!(
                "--exhaustive needs a modulus <= {EXHAUSTIVE_MAX_MODULUS}"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
        let x = match &args.x {
            Some(p) => load_matrix(p, &m)?,
            None => FieldMatrix::random(&mut rng, a, n, &m),
        };
        let w = match &args.w {
            Some(p) => load_matrix(p, &m)?,
            None => FieldMatrix::random(&mut rng, n, b, &m),
        };
        if (x.rows(), x.cols(), w.rows(), w.cols()) != (a, n, n, b) {
            return Err(CliError::Usage(format!(
                "matrices do not match dims ({a}, {n}, {b})"
            )));
        }
        let y_wrong = tamper.apply(&x.mul(&w)?)?;
        let scan = exhaustive_challenge_scan(&m, encoding, &x, &w, &y_wrong)?;
        let within_bound = scan.passing.len() as u64 <= scan.bound.numerator;
        let report = ExhaustiveReport {
            mode: "exhaustive",
            encoding: encoding.name().into(),
            a,
            n,
            b,
            modulus: m.to_string(),
            challenges: scan.challenges,
            passing_count: scan.passing.len(),
            passing: scan.passing,
            bound: scan.bound,
            within_bound,
        };
        let text = match args.format {
            OutputFormat::Json => to_json(&report),
            OutputFormat::Csv => to_csv(
                &[
                    "mode",
                    "encoding",
                    "a",
                    "n",
                    "b",
                    "modulus",
                    "challenges",
                    "passing_count",
                    "bound",
                    "within_bound",
                ],
                &[vec![
                    report.mode.into(),
                    report.encoding.clone(),
                    a.to_string(),
                    n.to_string(),
                    b.to_string(),
                    report.modulus.clone(),
                    report.challenges.to_string(),
                    report.passing_count.to_string(),
                    format_real(report.bound.value),
                    within_bound.to_string(),
                ]],
            ),
        };
        (text, within_bound)
    } else {
        if args.trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        let r = soundness_trial(&m, (a, n, b), encoding, &tamper, args.trials, args.seed)?;
        // six-sigma tail of the binomial miss count
        let mu = r.trials as f64 * r.bound.value;
        let within_bound = (r.undetected() as f64) <= mu + 6.0 * mu.sqrt() + 6.0;
        let report = StatisticalReport {
            mode: "statistical",
            encoding: r.encoding.clone(),
            a,
            n,
            b,
            modulus: r.modulus.clone(),
            seed: args.seed,
            trials: r.trials,
            detections: r.detections,
            undetected: r.undetected(),
            bound: r.bound.clone(),
            within_bound,
        };
        let text = match args.format {
            OutputFormat::Json => to_json(&report),
            OutputFormat::Csv => to_csv(
                &[
                    "mode",
                    "encoding",
                    "a",
                    "n",
                    "b",
                    "modulus",
                    "seed",
                    "trials",
                    "detections",
                    "bound",
                    "within_bound",
                ],
                &[vec![
                    report.mode.into(),
                    report.encoding.clone(),
                    a.to_string(),
                    n.to_string(),
                    b.to_string(),
                    report.modulus.clone(),
                    args.seed.to_string(),
                    report.trials.to_string(),
                    report.detections.to_string(),
                    format_real(report.bound.value),
                    within_bound.to_string(),
                ]],
            ),
        };
        (text, within_bound)
    };
    emit(&args.out, stdout, &text)?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

const MAX_GRID_POINTS: usize = 1_000_000;

pub(crate) fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad --grid {s:?} (expected lo:hi:step)"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() + 1.0;
    if count > MAX_GRID_POINTS as f64 {
        return Err(CliError::Usage(format!(
            "grid has more than {MAX_GRID_POINTS} points"
        )));
    }
    Ok((0..count as usize).map(|i| lo + i as f64 * step).collect())
}

fn parse_inputs(s: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad --inputs {s:?}")))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("bad --inputs {s:?}")));
    }
    Ok(v)
}

#[derive(Serialize)]
struct ApproxRow {
    input: String,
    float_reference: String,
    circuit_output_dequantized: String,
    abs_error: String,
}

impl ApproxRow {
    fn new(input: String, reference: f64, circuit: f64) -> Self {
        ApproxRow {
            input,
            float_reference: format_real(reference),
            circuit_output_dequantized: format_real(circuit),
            abs_error: format_real((circuit - reference).abs()),
        }
    }
}

fn approx(args: ApproxArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let m = parse_modulus(&args.modulus)?;
    let function = parse_function(&args.function)?;
    let params = args.fixed.params()?;
    params
        .validate(&m)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = args.grid.as_deref().map(parse_grid).transpose()?;

    let mut rows = Vec::new();
    let mut all_satisfied = true;
    match function {
        Function::Exp | Function::Gelu => {
            let grid = grid.ok_or_else(|| CliError::Usage(format!("{function} needs --grid")))?;
            for x in grid {
                let run = run_gadget(function, &[x], &params, &m)?;
                all_satisfied &= run.satisfied;
                let reference = match function {
                    Function::Exp => x.exp(),
                    _ => reference::gelu_tanh(x),
                };
                rows.push(ApproxRow::new(format_real(x), reference, run.outputs[0]));
            }
        }
        Function::Softmax | Function::Max => {
            let xs = match (&args.inputs, grid) {
                (Some(s), _) => parse_inputs(s)?,
                (None, Some(g)) => g,
                (None, None) => {
                    return Err(CliError::Usage(format!(
                        "{function} needs --inputs or --grid"
                    )))
                }
            };
            if xs.is_empty() {
                return Err(CliError::Usage("empty input vector".into()));
            }
            let run = run_gadget(function, &xs, &params, &m)?;
            all_satisfied &= run.satisfied;
            if function == Function::Softmax {
                for ((x, r), c) in xs.iter().zip(reference::softmax(&xs)).zip(&run.outputs) {
                    rows.push(ApproxRow::new(format_real(*x), r, *c));
                }
            } else {
                let joined = xs
                    .iter()
                    .map(|x| format_real(*x))
                    .collect::<Vec<_>>()
                    .join(";");
                let r = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                rows.push(ApproxRow::new(joined, r, run.outputs[0]));
            }
        }
    }
    let text = match args.format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(
            &[
                "input",
                "float_reference",
                "circuit_output_dequantized",
                "abs_error",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.input.clone(),
                        r.float_reference.clone(),
                        r.circuit_output_dequantized.clone(),
                        r.abs_error.clone(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(&args.out, stdout, &text)?;
    if all_satisfied {
        Ok(EXIT_OK)
    } else {
        Err(CliError::Failed(
            "a gadget witness failed its own constraints".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_grid("-1:0:0.25").unwrap(),
            vec![-1.0, -0.75, -0.5, -0.25, 0.0]
        );
        assert_eq!(parse_grid("0:0:1").unwrap(), vec![0.0]);
        for bad in ["1:0:1", "0:1:0", "0:1", "a:b:c", "0:1:-1", "0:1e9:1e-3"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sweep_parsing() {
        assert_eq!(
            parse_sweep("1x3x1, 3x2x2").unwrap(),
            vec![(1, 3, 1), (3, 2, 2)]
        );
        for bad in ["", "1x2", "0x1x1", "axbxc"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }
}
