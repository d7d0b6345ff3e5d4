//! Batch front end for the tensor rank laboratory.
//!
//! One binary, four subcommands: `rank` certifies rank bounds of a tensor
//! file, `verify-construction` runs the family checks for a parameter set,
//! `assemble` builds the two processed summands of a block-tagged instance
//! and certifies the containment, and `genericity` measures degrees of
//! freedom, fill behavior, weak columns, and the dimension threshold.
//!
//! Every run echoes its configuration into the report, draws all
//! randomness from one root seed, and renders the report as canonical
//! JSON, so identical configurations produce byte-identical bytes no
//! matter how many worker threads run underneath.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 bad input,
//! 3 budget exhausted before certification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use trl_core::construction::{
    build_m_family, counterexample_assembly, sigma_names, verify_clone_in_span,
    verify_offdiag_structure, verify_partition, verify_rank_one, ConstructionParams,
    DiagonalTemplate, MemberKind, PiFamily, DEFAULT_MATERIALIZE_BUDGET,
};
use trl_core::genericity::{
    assign_random, build_generic_t, degrees_of_freedom_report, dof_threshold_check,
    lickteig_pipeline, r_of_n, weak_column_scan, InstanceCatalog, VarFamily,
};
use trl_core::io;
use trl_core::jacobian::DEFAULT_EVAL_BOUND;
use trl_core::rank::{exact_rank, rank_bounds, verify_decomposition, Decomposition, SearchBudget};
use trl_core::{Error, FieldSpec, IndexSet, Label, Matrix};

#[derive(Parser)]
#[command(
    name = "trl",
    version,
    about = "Exact-arithmetic order-3 tensor rank laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base field: `q` for the rationals or `fp:<prime>`
    #[arg(long, global = true, default_value = "q")]
    field: String,
    /// Root seed for every randomized sample in the run
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on search candidates and materialized family members
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker thread cap; falls back to TRL_THREADS, then all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file with construction parameters
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Directory receiving the report and any artifact files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify rank bounds of a tensor file, optionally against a witness
    Rank {
        /// Tensor file in the canonical JSON format
        tensor: PathBuf,
        /// Decomposition file whose verification caps the upper bound
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Run the partition, rank-one, span and digit-equality checks
    VerifyConstruction,
    /// Assemble the processed summands and certify the containment
    Assemble {
        /// Block-tagged tensor file; omitted means a generated instance
        #[arg(long)]
        tensor: Option<PathBuf>,
        /// Side of the generated instance
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Term count of the generated instance
        #[arg(long, default_value_t = 1)]
        r: usize,
    },
    /// Degrees-of-freedom and genericity measurements
    Genericity {
        #[command(subcommand)]
        check: GenericityCheck,
    },
}

#[derive(Subcommand)]
enum GenericityCheck {
    /// Degrees of freedom of the generated instance's entries
    Dof {
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Term count; defaults to the instance-size formula
        #[arg(long)]
        r: Option<usize>,
        /// Count freedom over the partner base instead of the prime field
        #[arg(long)]
        partner_base: bool,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Jacobian fill test for sums of rank-one cube terms
    Lickteig {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Shift the system by seeded base-field corrections first
        #[arg(long)]
        corrected: bool,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Left-to-right projected column scan of the instance's first family
    Weakcols {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Column count; defaults to the instance-size formula
        #[arg(long)]
        r: Option<usize>,
        /// Projection codimension
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Total deficit bounding the tolerable weak-column count
        #[arg(long)]
        delta: Option<u64>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Dimension-count rank bound and asymptotic threshold bookkeeping
    Prop {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::BudgetExceeded { .. } => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    configure_threads(cli)?;
    match &cli.command {
        Command::Rank { tensor, witness } => cmd_rank(cli, tensor, witness.as_deref()),
        Command::VerifyConstruction => cmd_verify_construction(cli),
        Command::Assemble { tensor, n, r } => cmd_assemble(cli, tensor.as_deref(), *n, *r),
        Command::Genericity { check } => cmd_genericity(cli, check),
    }
}

fn configure_threads(cli: &Cli) -> Result<(), Error> {
    let requested = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("TRL_THREADS") {
            Ok(text) => Some(text.parse::<usize>().map_err(|_| {
                Error::InvalidParams(format!("TRL_THREADS must be a thread count, got {text:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(Error::InvalidParams("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn parse_field(text: &str) -> Result<FieldSpec, Error> {
    if text.eq_ignore_ascii_case("q") {
        return Ok(FieldSpec::Q);
    }
    if let Some(p) = text.strip_prefix("fp:") {
        let p = p
            .parse::<u64>()
            .map_err(|_| Error::InvalidParams(format!("field modulus {p:?} is not a number")))?;
        return FieldSpec::fp(p);
    }
    Err(Error::InvalidParams(format!(
        "field must be `q` or `fp:<prime>`, got {text:?}"
    )))
}

fn search_budget(cli: &Cli) -> SearchBudget {
    let mut budget = SearchBudget::with_seed(cli.seed);
    if let Some(b) = cli.budget {
        budget.max_candidates = b;
        budget.max_members = b as u128;
    }
    budget
}

fn materialize_cap(cli: &Cli) -> u128 {
    cli.budget
        .map(|b| b as u128)
        .unwrap_or(DEFAULT_MATERIALIZE_BUDGET)
}

fn load_params(cli: &Cli) -> Result<Option<ConstructionParams>, Error> {
    let Some(path) = &cli.params else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)?;
    let params: ConstructionParams = serde_json::from_str(&text)?;
    params.validate()?;
    Ok(Some(params))
}

fn config_value(cli: &Cli, command: &str, field: FieldSpec, params: Value) -> Value {
    json!({
        "command": command,
        "field": io::field_to_value(field),
        "seed": cli.seed,
        "budget": cli.budget,
        "params": params,
    })
}

fn emit(cli: &Cli, name: &str, report: &Value) -> Result<(), Error> {
    let text = io::to_canonical_string(report);
    print!("{text}");
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}.json")), &text)?;
    }
    Ok(())
}

fn write_artifact(cli: &Cli, name: &str, value: &Value) -> Result<(), Error> {
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), io::to_canonical_string(value))?;
    }
    Ok(())
}

fn cmd_rank(cli: &Cli, tensor: &Path, witness: Option<&Path>) -> Result<u8, Error> {
    let t = io::read_tensor(tensor)?;
    let budget = search_budget(cli);
    let searched = matches!(t.field(), FieldSpec::Fp(_));
    let cert = if searched {
        exact_rank(&t, &budget)?
    } else {
        rank_bounds(&t)
    };
    let mut upper = cert.upper;
    let mut exact = cert.exact;
    let mut witness_value = Value::Null;
    let mut witness_failed = false;
    if let Some(path) = witness {
        let text = std::fs::read_to_string(path)?;
        let parsed: Value = serde_json::from_str(&text)?;
        let d = Decomposition::from_json_value(&parsed, t.field())?;
        let verified = verify_decomposition(&t, &d)?;
        if verified {
            upper = upper.min(d.rank());
            exact = exact || cert.lower == upper;
        } else {
            witness_failed = true;
        }
        witness_value = json!({"terms": d.rank(), "verified": verified});
    }
    let report = json!({
        "config": config_value(cli, "rank", t.field(), Value::Null),
        "checks": [{
            "id": "rank_bounds",
            "ok": !witness_failed,
            "dims": t.dims().to_vec(),
            "lower": cert.lower,
            "upper": upper,
            "exact": exact,
            "examined": cert.examined,
            "searched": searched,
            "trace": cert.trace,
            "witness": witness_value,
        }],
        "ok": !witness_failed,
    });
    write_artifact(cli, "certificate.json", &cert.to_json_value())?;
    emit(cli, "rank", &report)?;
    if witness_failed {
        Ok(1)
    } else if searched && !cert.exact {
        Ok(3)
    } else {
        Ok(0)
    }
}

fn family_for(
    params: &ConstructionParams,
    cap: u128,
) -> Result<(PiFamily, trl_core::MFamily), Error> {
    let pi = PiFamily::canonical(params.r, params.theta)?;
    let rows: Vec<Label> = (1..=params.r)
        .map(|i| Label::atom(format!("a{i}")))
        .collect::<Result<_, _>>()?;
    let cols: Vec<Label> = (1..=params.r)
        .map(|i| Label::atom(format!("b{i}")))
        .collect::<Result<_, _>>()?;
    let template = DiagonalTemplate::new(rows, cols)?;
    let family = build_m_family(params, &template, &pi, cap)?;
    Ok((pi, family))
}

fn cmd_verify_construction(cli: &Cli) -> Result<u8, Error> {
    let field = parse_field(&cli.field)?;
    let params = load_params(cli)?
        .ok_or_else(|| Error::InvalidParams("verify-construction needs --params <file>".into()))?;
    let cap = materialize_cap(cli);
    let (pi, family) = family_for(&params, cap)?;

    let partition = verify_partition(&params, &pi, cap)?;
    let partition_check = json!({
        "id": "partition",
        "ok": partition.ok,
        "cells_checked": partition.cells_checked.to_string(),
        "violation": partition.first_violation.as_ref().map(|v| json!({
            "row": v.row,
            "row_tuple": v.row_tuple.to_string(),
            "col_tuple": v.col_tuple.to_string(),
            "count": v.count,
        })),
    });

    let rank_one = verify_rank_one(&family, field, cap)?;
    let rank_one_check = json!({
        "id": "rank_one",
        "ok": rank_one.ok,
        "members_checked": rank_one.members_checked,
        "violation": rank_one.first_violation,
    });

    let span = verify_clone_in_span(&family, field, cap)?;
    let span_check = json!({
        "id": "span",
        "ok": span.ok,
        "solved": span.solved,
        "residual_zero": span.residual_zero,
        "dim_span": span.dim_span,
        "members": span.members,
    });

    let mut digit_ok = true;
    let mut digit_pairs = 0usize;
    let mut digit_violation = Value::Null;
    if params.r >= 2 {
        let names = sigma_names(&params, cap)?;
        let rows_host = IndexSet::new(family.template.rows().to_vec())?;
        let cols_host = IndexSet::new(family.template.cols().to_vec())?;
        'members: for member in family.members() {
            let MemberKind::Phi { index } = member.kind else {
                continue;
            };
            let m = family.member_matrix(member, &rows_host, &cols_host, &names, field)?;
            for i in 0..params.r {
                for j in 0..params.r {
                    if i == j {
                        continue;
                    }
                    let out = verify_offdiag_structure(&family, &m, i, j)?;
                    digit_pairs += 1;
                    if !out.ok {
                        digit_ok = false;
                        digit_violation = json!({
                            "member": index.to_string(),
                            "row_slot": i,
                            "col_slot": j,
                            "labels": out.first_violation,
                        });
                        break 'members;
                    }
                }
            }
        }
    }
    let digit_check = json!({
        "id": "digit_equality",
        "ok": digit_ok,
        "pairs_checked": digit_pairs,
        "violation": digit_violation,
    });

    let ok = partition.ok && rank_one.ok && span.ok && digit_ok;
    let report = json!({
        "config": config_value(cli, "verify-construction", field, params_value(&params)),
        "checks": [partition_check, rank_one_check, span_check, digit_check],
        "ok": ok,
    });
    emit(cli, "verify_construction", &report)?;
    Ok(if ok { 0 } else { 1 })
}

fn params_value(params: &ConstructionParams) -> Value {
    serde_json::to_value(params).expect("parameter structs always serialize")
}

fn cmd_assemble(cli: &Cli, tensor: Option<&Path>, n: usize, r: usize) -> Result<u8, Error> {
    let field = parse_field(&cli.field)?;
    let params = load_params(cli)?
        .map(Ok)
        .unwrap_or_else(|| ConstructionParams::desk(1, 1, 2, 17))?;
    let cap = materialize_cap(cli);
    let (t, source) = match tensor {
        Some(path) => (
            io::read_tensor(path)?,
            json!({"file": path.display().to_string()}),
        ),
        None => {
            let cat = InstanceCatalog::new(n, r)?;
            let symbolic = build_generic_t(&cat, field)?;
            let mut sampled = None;
            for offset in 0..256u64 {
                let sample_seed = cli.seed.wrapping_add(offset);
                let (cand, point) = assign_random(&symbolic, DEFAULT_EVAL_BOUND, sample_seed)?;
                if point.iter().all(|s| !s.is_zero()) {
                    sampled = Some((cand, sample_seed));
                    break;
                }
            }
            let Some((t, sample_seed)) = sampled else {
                return Err(Error::InvalidParams(
                    "no sample point with all coordinates nonzero within 256 seeds".into(),
                ));
            };
            (
                t,
                json!({"generated": {"n": n, "r": r, "sample_seed": sample_seed}}),
            )
        }
    };
    let out = counterexample_assembly(&t, &params, cap)?;
    let ok = out.containment && out.failures.is_empty();
    let report = json!({
        "config": config_value(cli, "assemble", field, params_value(&params)),
        "source": source,
        "checks": [{
            "id": "containment",
            "ok": ok,
            "depth": out.depth,
            "u_dims": out.u_dims.to_vec(),
            "v_dims": out.v_dims.to_vec(),
            "mod_space_dims": out.mod_space_dims.to_vec(),
            "family_dims": out.family_dims.iter().map(|d| d.to_vec()).collect::<Vec<_>>(),
            "dims_additive": out.dims_additive,
            "degenerate": out.degenerate,
            "summand_dims": [
                out.summands[0].dims().to_vec(),
                out.summands[1].dims().to_vec(),
            ],
            "direct_sum_dims": out.direct_sum.dims().to_vec(),
            "failures": out.failures,
        }],
        "ok": ok,
    });
    write_artifact(
        cli,
        "summand_1.json",
        &io::tensor_to_value(&out.summands[0]),
    )?;
    write_artifact(
        cli,
        "summand_2.json",
        &io::tensor_to_value(&out.summands[1]),
    )?;
    write_artifact(
        cli,
        "direct_sum.json",
        &io::tensor_to_value(&out.direct_sum),
    )?;
    emit(cli, "assemble", &report)?;
    Ok(if ok { 0 } else { 1 })
}

fn cmd_genericity(cli: &Cli, check: &GenericityCheck) -> Result<u8, Error> {
    let field = parse_field(&cli.field)?;
    match check {
        GenericityCheck::Dof {
            n,
            r,
            partner_base,
            trials,
        } => {
            let r = r.unwrap_or_else(|| r_of_n(*n).max(1));
            let cat = InstanceCatalog::new(*n, r)?;
            let symbolic = build_generic_t(&cat, field)?;
            let base = if *partner_base {
                cat.base_indices()
            } else {
                Vec::new()
            };
            let rep = degrees_of_freedom_report(&symbolic, &base, *trials, cli.seed)?;
            let report = json!({
                "config": config_value(cli, "genericity dof", field, Value::Null),
                "checks": [{
                    "id": "degrees_of_freedom",
                    "ok": true,
                    "n": n,
                    "r": r,
                    "entries": symbolic.dims().iter().product::<usize>(),
                    "over_partner_base": partner_base,
                    "dof_lower": rep.rank,
                    "per_trial": rep.per_trial,
                    "trials": rep.trials,
                    "char_caveat": rep.char_caveat,
                }],
                "ok": true,
            });
            emit(cli, "genericity_dof", &report)?;
            Ok(0)
        }
        GenericityCheck::Lickteig {
            n,
            k,
            corrected,
            trials,
        } => {
            let rep = lickteig_pipeline(*n, *k, field, *corrected, *trials, cli.seed)?;
            let ok = rep.transfer_ok;
            let report = json!({
                "config": config_value(cli, "genericity lickteig", field, Value::Null),
                "checks": [{
                    "id": "fill",
                    "ok": ok,
                    "n": rep.n,
                    "k": rep.k,
                    "entry_count": rep.entry_count,
                    "fill_target": rep.fill_target,
                    "initial_rank": rep.initial_rank,
                    "full_rank": rep.full_rank,
                    "fills": rep.fills,
                    "deficient": rep.deficient,
                    "transfer_ok": rep.transfer_ok,
                    "corrected": rep.corrected,
                    "trials": rep.trials,
                }],
                "ok": ok,
            });
            emit(cli, "genericity_lickteig", &report)?;
            Ok(if ok { 0 } else { 1 })
        }
        GenericityCheck::Weakcols {
            n,
            r,
            d,
            delta,
            trials,
        } => {
            let r = r.unwrap_or_else(|| r_of_n(*n).max(1));
            let cat = InstanceCatalog::new(*n, r)?;
            let mut columns = Vec::with_capacity(r);
            for alpha in 0..r {
                let mut column = Vec::with_capacity(*n);
                for i in 0..*n {
                    column.push(cat.var(field, VarFamily::X, i, alpha)?);
                }
                columns.push(column);
            }
            if *d >= *n {
                return Err(Error::InvalidParams(format!(
                    "projection codimension {d} must be below the side {n}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let q = Matrix::from_fn(
                IndexSet::positional(n - d),
                IndexSet::positional(*n),
                field.zero(),
                |_, _| field.random_scalar(&mut rng, DEFAULT_EVAL_BOUND),
            );
            let rep = weak_column_scan(&columns, &q, *d, *delta, *trials, cli.seed)?;
            let ok = rep.weak_within_limit != Some(false);
            let report = json!({
                "config": config_value(cli, "genericity weakcols", field, Value::Null),
                "checks": [{
                    "id": "weak_columns",
                    "ok": ok,
                    "n": n,
                    "r": r,
                    "d": d,
                    "target": rep.target,
                    "increments": rep.increments,
                    "statuses": serde_json::to_value(&rep.statuses)?,
                    "weak": rep.weak,
                    "certified": rep.certified,
                    "indeterminate": rep.indeterminate,
                    "weak_limit": rep.weak_limit,
                    "weak_within_limit": rep.weak_within_limit,
                    "trials": rep.trials,
                }],
                "ok": ok,
            });
            emit(cli, "genericity_weakcols", &report)?;
            Ok(if ok { 0 } else { 1 })
        }
        GenericityCheck::Prop { n, trials } => {
            let rep = dof_threshold_check(*n, *trials, cli.seed)?;
            let ok = !rep.threshold_positive || rep.exceeds_half_r;
            let report = json!({
                "config": config_value(cli, "genericity prop", field, Value::Null),
                "checks": [{
                    "id": "dimension_threshold",
                    "ok": ok,
                    "n": rep.n,
                    "r": rep.r,
                    "dof_lower": rep.dof_lower,
                    "implied_rank_bound": rep.implied_rank_bound,
                    "exceeds_half_r": rep.exceeds_half_r,
                    "threshold_at_n": rep.threshold_at_n.to_string(),
                    "threshold_positive": rep.threshold_positive,
                    "first_positive_n": rep.first_positive_n,
                    "below_asymptotic_regime": !rep.threshold_positive,
                    "trials": rep.trials,
                }],
                "ok": ok,
            });
            emit(cli, "genericity_prop", &report)?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}
