//! Command-line front end: parse dgquiver files, dispatch the verification
//! suites, and emit deterministic JSON reports.

use crate::bimodule::{self, CycElement, NatElement};
use crate::cycompletion::{self, PiCtx};
use crate::dgcat::{parse_presentation, DGCatPresentation, NCPoly, Word};
use crate::linalg::HomologyDims;
use crate::mixed::{sample_endo_word, MixedCtx};
use crate::necklace::{self, NecklaceCtx, NecklaceElement};
use crate::polyhoch::{self, FinGradedCat, Polarity};
use crate::repfunctor::{self, DimVector, RepWorld};
use crate::report::Report;
use crate::{qi, Error, Q, Result};
use clap::{Parser, Subcommand};
use num::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "ncx", about = "exact noncommutative calculus on DG categories", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// write the JSON report to this path
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// maximum word length for truncated computations
    #[arg(long, default_value_t = 6, global = true)]
    max_wordlen: usize,
    /// maximum weight for truncated computations
    #[arg(long, default_value_t = 3, global = true)]
    max_weight: usize,
    /// lower end of the homological degree window
    #[arg(long, default_value_t = -2, global = true)]
    deg_min: i64,
    /// upper end of the homological degree window
    #[arg(long, default_value_t = 2, global = true)]
    deg_max: i64,
    /// seed for the randomized property suites
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// number of samples for the randomized property suites
    #[arg(long, default_value_t = 100, global = true)]
    samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a presentation and check the DG axioms
    Validate { file: PathBuf },
    /// Build Ω¹(A), Res(A) and the dual resolution, checking each
    Resolve { file: PathBuf },
    /// Run the mixed-complex identity suite on random words
    MixedCheck { file: PathBuf },
    /// Emit the Calabi-Yau completion Π_n(A) as a dgquiver presentation
    CyComplete {
        file: PathBuf,
        /// Calabi-Yau dimension
        #[arg(long)]
        n: i64,
    },
    /// Verify λ, ω, ω♯ and the bivector of the completion
    VerifyCy {
        file: PathBuf,
        #[arg(long)]
        n: i64,
    },
    /// Bracket two necklace elements
    NecklaceBracket {
        file: PathBuf,
        xi: PathBuf,
        eta: PathBuf,
        #[arg(long)]
        m: i64,
    },
    /// Maurer-Cartan residual of a candidate
    McCheck {
        file: PathBuf,
        pi: PathBuf,
        #[arg(long)]
        m: i64,
    },
    /// Double-Poisson verification of a weight-2 candidate
    DoublePoissonCheck {
        file: PathBuf,
        pi2: PathBuf,
        #[arg(long)]
        m: i64,
    },
    /// Non-degeneracy of a weight-2 candidate via the cone of π₂♯
    NondegCheck {
        file: PathBuf,
        pi2: PathBuf,
        #[arg(long)]
        m: i64,
    },
    /// Poly-Hochschild and infinitesimal-bialgebra checks on finite data
    PolyhochCheck {
        tensors: PathBuf,
        #[arg(long, default_value_t = -1)]
        m: i64,
    },
    /// Emit the representation CDGA A_V
    Rep {
        file: PathBuf,
        /// dimension vector, e.g. x=2,y=1
        #[arg(long)]
        dim: String,
    },
    /// Emit a Van den Bergh image with its differential
    Vdb {
        file: PathBuf,
        #[arg(long)]
        dim: String,
        /// which bimodule to apply the functor to
        #[arg(long, default_value = "res")]
        module: String,
    },
    /// Trace a naturalized word into Cartan forms
    Trace {
        file: PathBuf,
        elem: PathBuf,
        #[arg(long)]
        dim: String,
    },
    /// The Ψ† Lie-map property suite
    PsidaggerCheck {
        file: PathBuf,
        #[arg(long)]
        dim: String,
        #[arg(long)]
        m: i64,
    },
    /// Truncated homology of the Y/Υ complexes
    Homology {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        weight: usize,
        #[arg(long, default_value_t = false)]
        upsilon: bool,
    },
}

fn parse_q(s: &str) -> Result<Q> {
    Q::from_str(s).map_err(|e| Error::BadInput(format!("bad rational `{s}`: {e}")))
}

#[derive(serde::Deserialize)]
struct JsonTerm {
    coeff: String,
    word: Vec<String>,
}

/// Reads an element file: a JSON list of {coeff, word} pairs over a given
/// presentation's arrow names. The empty word denotes the identity of the
/// object named by `"id:<object>"`.
fn parse_element_words(pres: &DGCatPresentation, text: &str) -> Result<Vec<(Word, Q)>> {
    let items: Vec<JsonTerm> = serde_json::from_str(text)?;
    let mut out = Vec::new();
    for t in items {
        let coeff = parse_q(&t.coeff)?;
        if t.word.len() == 1 && t.word[0].starts_with("id:") {
            let obj = pres.object_id(&t.word[0][3..])?;
            out.push((Word::id(obj), coeff));
            continue;
        }
        let letters: std::result::Result<Vec<usize>, Error> =
            t.word.iter().map(|n| pres.arrow_id(n)).collect();
        let letters = letters?;
        if !pres.word_composable(&letters) {
            return Err(Error::EndpointMismatch(format!("word {:?} is not composable", t.word)));
        }
        let base = pres.arrows[*letters.last().ok_or_else(|| {
            Error::BadInput("empty word needs the id:<object> form".into())
        })?]
        .src;
        out.push((Word { letters, base }, coeff));
    }
    Ok(out)
}

fn element_to_json(pres: &DGCatPresentation, terms: &BTreeMap<Word, Q>) -> serde_json::Value {
    let items: Vec<serde_json::Value> = terms
        .iter()
        .map(|(w, c)| {
            let word: Vec<String> = if w.is_id() {
                vec![format!("id:{}", pres.objects[w.base])]
            } else {
                w.letters.iter().map(|&a| pres.arrows[a].name.clone()).collect()
            };
            serde_json::json!({
                "coeff": crate::dgcat::format_q(c),
                "word": word,
            })
        })
        .collect();
    serde_json::Value::Array(items)
}

fn parse_dims(pres: &DGCatPresentation, spec: &str) -> Result<DimVector> {
    let mut dims = vec![0usize; pres.objects.len()];
    for part in spec.split(',') {
        let (name, val) = part
            .split_once('=')
            .ok_or_else(|| Error::BadInput(format!("bad dimension entry `{part}`")))?;
        let x = pres.object_id(name.trim())?;
        dims[x] = val
            .trim()
            .parse()
            .map_err(|e| Error::BadInput(format!("bad dimension `{val}`: {e}")))?;
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::BadInput("every object needs a positive dimension".into()));
    }
    Ok(DimVector(dims))
}

fn homology_to_json(h: &HomologyDims) -> serde_json::Value {
    let dims: BTreeMap<String, usize> = h.dims.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let edges: Vec<String> = h.edges.iter().map(|k| k.to_string()).collect();
    serde_json::json!({ "dims": dims, "edges": edges })
}

pub fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render_text());
            let json = report.to_json();
            if let Some(path) = &cli.json {
                if let Err(e) = std::fs::write(path, &json) {
                    eprintln!("error writing report: {e}");
                    std::process::exit(2);
                }
            } else {
                print!("{json}");
            }
            if !report.all_pass() {
                std::process::exit(1);
            }
        }
        Err(e) => {
            let err = serde_json::json!({
                "schema": "ncx-report/1",
                "error": e.to_string(),
            });
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap());
            std::process::exit(2);
        }
    }
}

fn load_presentation(report: &mut Report, file: &PathBuf) -> Result<DGCatPresentation> {
    let text = std::fs::read_to_string(file)?;
    report.digest_input("presentation", text.as_bytes());
    parse_presentation(&text)
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Validate { file } => {
            let mut report = Report::new("validate");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("objects", pres.objects.len());
            report.set_config("arrows", pres.arrows.len());
            let dd = pres.d_squared_report();
            let ok = dd.iter().all(|(_, p)| p.is_zero());
            for (name, p) in &dd {
                if !p.is_zero() {
                    report.push(&format!("d-squared:{name}"), false, pres.format_poly(p));
                }
            }
            report.push("d-squared", ok, if ok { "d² = 0 on every arrow" } else { "violations above" });
            match pres.cellular_order() {
                Ok(order) => {
                    let names: Vec<&str> =
                        order.iter().map(|&i| pres.arrows[i].name.as_str()).collect();
                    report.push("cellular", true, format!("order: {}", names.join(", ")));
                }
                Err(cyc) => {
                    let names: Vec<&str> =
                        cyc.iter().map(|&i| pres.arrows[i].name.as_str()).collect();
                    report.push("cellular", false, format!("cycle: {}", names.join(", ")));
                }
            }
            // round-trip stability
            let printed = pres.to_dgquiver();
            let again = parse_presentation(&printed)?;
            report.push("roundtrip", again.to_dgquiver() == printed, "print ∘ parse is stable");
            Ok(report)
        }
        Command::Resolve { file } => {
            let mut report = Report::new("resolve");
            let pres = load_presentation(&mut report, file)?;
            pres.validate_d_squared()?;
            let om = bimodule::omega1(&pres)?;
            report.push("omega1:d-squared", om.validate_d_squared(&pres).is_ok(), format!("rank {}", om.rank()));
            let r = bimodule::res(&pres)?;
            report.push("res:d-squared", r.module.validate_d_squared(&pres).is_ok(), format!("rank {}", r.module.rank()));
            let dl = bimodule::dual(&pres, &r.module, |l| format!("({l})^"));
            report.push("dual-res:d-squared", dl.validate_d_squared(&pres).is_ok(), format!("rank {}", dl.rank()));
            // exactness: m ∘ α = 0
            let mut ok = true;
            for a in bimodule::alpha_map(&pres, &r)? {
                if !bimodule::multiply_e_part(&pres, &r, &a)?.is_zero() {
                    ok = false;
                }
            }
            report.push("exactness", ok, "m∘α = 0 on every generator");
            let mut bases = BTreeMap::new();
            bases.insert(
                "res".to_string(),
                serde_json::json!(r
                    .module
                    .basis
                    .iter()
                    .map(|b| serde_json::json!({"label": b.label, "degree": b.degree}))
                    .collect::<Vec<_>>()),
            );
            report.outputs = bases;
            Ok(report)
        }
        Command::MixedCheck { file } => {
            let mut report = Report::new("mixed-check");
            let pres = load_presentation(&mut report, file)?;
            pres.validate_d_squared()?;
            report.set_config("seed", cli.seed);
            report.set_config("samples", cli.samples);
            report.set_config("max_wordlen", cli.max_wordlen);
            report.set_config("max_weight", cli.max_weight);
            let ctx = MixedCtx::new(&pres)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut fails: BTreeMap<&str, usize> = BTreeMap::new();
            let mut tested = 0usize;
            let mut guard = 0usize;
            while tested < cli.samples && guard < cli.samples * 60 {
                guard += 1;
                let Some(w) =
                    crate::mixed::sample_word(&ctx.tc, &mut rng, cli.max_wordlen, cli.max_weight)
                else {
                    continue;
                };
                tested += 1;
                let p = NCPoly::from_word(w.clone(), &ctx.tc.pres);
                if !ctx.sd_tilde(&ctx.sd_tilde(&p)).is_zero() {
                    *fails.entry("sd-tilde-squared").or_default() += 1;
                }
                if ctx.tc.pres.word_src(&w) == ctx.tc.pres.word_tgt(&w) {
                    if !ctx.commutator_defect(&p)?.is_zero() {
                        *fails.entry("commutator").or_default() += 1;
                    }
                    let cls = CycElement::from_word(&ctx.tc, &w, qi(1))?;
                    if !cls.is_zero() {
                        if !ctx.b_map(&ctx.b_map(&cls)?)?.is_zero() {
                            *fails.entry("b-squared").or_default() += 1;
                        }
                        let anti = ctx.b_map(&ctx.d_cycl(&cls)?)?.add(&ctx.d_cycl(&ctx.b_map(&cls)?)?);
                        if !anti.is_zero() {
                            *fails.entry("bd-plus-db").or_default() += 1;
                        }
                    }
                    let y = NatElement::from_word(&ctx.tc, &w, qi(1))?;
                    if !y.is_zero() && ctx.weight(&w) >= 1 {
                        let hd = ctx.homotopy_h(&ctx.d_nat(&y)?)?;
                        let dh = ctx.d_nat(&ctx.homotopy_h(&y)?)?;
                        if hd.add(&dh) != y.sub(&ctx.tau_nat(&y)) {
                            *fails.entry("homotopy").or_default() += 1;
                        }
                        let ups = ctx.pr(&y)?;
                        if ctx.pr(&ctx.rho(&ups)?)? != ups.scale(&qi(ctx.weight(&w) as i64)) {
                            *fails.entry("pr-rho").or_default() += 1;
                        }
                    }
                }
            }
            for name in ["sd-tilde-squared", "commutator", "b-squared", "bd-plus-db", "homotopy", "pr-rho"] {
                let n = fails.get(name).copied().unwrap_or(0);
                report.push(name, n == 0, format!("{n} failures over {tested} samples"));
            }
            Ok(report)
        }
        Command::CyComplete { file, n } => {
            let mut report = Report::new("cy-complete");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("n", n);
            let comp = cycompletion::cy_completion(&pres, *n)?;
            let text = comp.pi.to_dgquiver();
            report.push("d-squared", comp.pi.validate_d_squared().is_ok(), "Π is a DG category");
            report
                .outputs
                .insert("presentation".into(), serde_json::Value::String(text.clone()));
            println!("{text}");
            Ok(report)
        }
        Command::VerifyCy { file, n } => {
            let mut report = Report::new("verify-cy");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("n", n);
            let pictx = PiCtx::new(cycompletion::cy_completion(&pres, *n)?)?;
            let lam = cycompletion::liouville(&pictx)?;
            report.push("liouville-closed", pictx.mctx.d_nat(&lam)?.is_zero(), format!("{} terms", lam.terms.len()));
            let om = cycompletion::cy_form(&pictx)?;
            report.push("omega-closed", pictx.mctx.d_nat(&om)?.is_zero(), format!("{} terms", om.terms.len()));
            let sharp = cycompletion::omega_sharp(&pictx, &om)?;
            let perm = cycompletion::signed_permutation(&sharp);
            report.push("omega-sharp-permutation", perm.is_some(), "ω♯ permutes the basis up to sign");
            if perm.is_some() {
                let p = cycompletion::bivector(&pictx, &om, &sharp)?;
                let back = cycompletion::sharp_of_bivector(&pictx, &p, &sharp)?;
                report.push("bivector-roundtrip", back == om, "(ω♯⊗ω♯)(P) = ω");
                let rot = cycompletion::rotate_bivector(&pictx, &p)?;
                report.push("bivector-cyclic", rot == p, "P is (m-1)-cyclical");
                report.push("bivector-closed", cycompletion::d_dual_class(&pictx, &p)?.is_zero(), "dP = 0");
                // bracket consistency sample
                let nctx = NecklaceCtx::new(&pres, pictx.comp.m)?;
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let mut tested = 0usize;
                let mut bad = 0usize;
                let mut guard = 0;
                while tested < cli.samples.min(50) && guard < 3000 {
                    guard += 1;
                    let Some(wa) = sample_endo_word(&nctx.comp.tc, &mut rng, 5, 2) else { continue };
                    let Some(wb) = sample_endo_word(&nctx.comp.tc, &mut rng, 5, 2) else { continue };
                    let a = nctx.from_word(&wa, qi(1))?;
                    let b = nctx.from_word(&wb, qi(1))?;
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    tested += 1;
                    let direct = nctx.bracket(&a, &b)?;
                    let via = necklace::bracket_via_bivector(&pictx, &p, &a, &b)?;
                    if direct != via {
                        bad += 1;
                    }
                }
                report.push(
                    "bracket-consistency",
                    bad == 0,
                    format!("{bad} disagreements over {tested} pairs"),
                );
            }
            report.outputs.insert("sharp-table".into(), serde_json::json!(cycompletion::sharp_table(&pictx, &sharp)));
            Ok(report)
        }
        Command::NecklaceBracket { file, xi, eta, m } => {
            let mut report = Report::new("necklace-bracket");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("m", m);
            let nctx = NecklaceCtx::new(&pres, *m)?;
            let xi_text = std::fs::read_to_string(xi)?;
            let eta_text = std::fs::read_to_string(eta)?;
            report.digest_input("xi", xi_text.as_bytes());
            report.digest_input("eta", eta_text.as_bytes());
            let mut a = NecklaceElement::zero();
            for (w, c) in parse_element_words(nctx.pres(), &xi_text)? {
                a = a.add(&nctx.from_word(&w, c)?);
            }
            let mut b = NecklaceElement::zero();
            for (w, c) in parse_element_words(nctx.pres(), &eta_text)? {
                b = b.add(&nctx.from_word(&w, c)?);
            }
            let br = nctx.bracket(&a, &b)?;
            report.push("bracket", true, format!("{} terms", br.terms.len()));
            report.outputs.insert("bracket".into(), element_to_json(nctx.pres(), &br.terms));
            Ok(report)
        }
        Command::McCheck { file, pi, m } => {
            let mut report = Report::new("mc-check");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("m", m);
            report.set_config("max_weight", cli.max_weight);
            let nctx = NecklaceCtx::new(&pres, *m)?;
            let text = std::fs::read_to_string(pi)?;
            report.digest_input("pi", text.as_bytes());
            let mut cand = NecklaceElement::zero();
            for (w, c) in parse_element_words(nctx.pres(), &text)? {
                cand = cand.add(&nctx.from_word(&w, c)?);
            }
            for (w, _) in &cand.terms {
                if nctx.weight(w) < 2 {
                    return Err(Error::BadInput(
                        "Maurer-Cartan candidates live in weights ≥ 2".into(),
                    ));
                }
            }
            let resid = nctx.mc_residual(&cand, cli.max_weight)?;
            let mut by_weight: BTreeMap<usize, usize> = BTreeMap::new();
            for (w, _) in &resid.terms {
                *by_weight.entry(nctx.weight(w)).or_default() += 1;
            }
            let mut trunc = BTreeMap::new();
            trunc.insert("max_weight".into(), cli.max_weight as i64);
            report.push_truncated(
                "maurer-cartan",
                resid.is_zero(),
                format!("residual terms per weight: {by_weight:?}"),
                trunc,
            );
            report.outputs.insert("residual".into(), element_to_json(nctx.pres(), &resid.terms));
            Ok(report)
        }
        Command::DoublePoissonCheck { file, pi2, m } => {
            let mut report = Report::new("double-poisson-check");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("m", m);
            let nctx = NecklaceCtx::new(&pres, *m)?;
            let text = std::fs::read_to_string(pi2)?;
            report.digest_input("pi2", text.as_bytes());
            let mut cand = necklace::MarkedElement::zero();
            for (w, c) in parse_element_words(nctx.pres(), &text)? {
                cand = cand.add(&necklace::marked_from_word(&nctx, &w, c)?);
            }
            let rep = necklace::double_poisson_check(&nctx, &cand)?;
            report.push("cyclicity", rep.cyclicity_ok, "1-cyclicity of the candidate");
            report.push("closed", rep.closed, "the double bracket respects d");
            report.push(
                "double-jacobi",
                rep.double_jacobi_ok,
                format!("{} generator triples expanded", rep.triples_checked),
            );
            report.push("bracket-square", rep.bracket_square_zero, "{π₂,π₂} = 0");
            Ok(report)
        }
        Command::NondegCheck { file, pi2, m } => {
            let mut report = Report::new("nondeg-check");
            let pres = load_presentation(&mut report, file)?;
            report.set_config("m", m);
            report.set_config("deg_min", cli.deg_min);
            report.set_config("deg_max", cli.deg_max);
            report.set_config("max_wordlen", cli.max_wordlen);
            let nctx = NecklaceCtx::new(&pres, *m)?;
            let text = std::fs::read_to_string(pi2)?;
            report.digest_input("pi2", text.as_bytes());
            let mut cand = NecklaceElement::zero();
            for (w, c) in parse_element_words(nctx.pres(), &text)? {
                cand = cand.add(&nctx.from_word(&w, c)?);
            }
            let rep = necklace::nondegeneracy_pi2(&nctx, &cand, cli.deg_min, cli.deg_max, cli.max_wordlen)?;
            let mut trunc = BTreeMap::new();
            trunc.insert("deg_min".into(), cli.deg_min);
            trunc.insert("deg_max".into(), cli.deg_max);
            trunc.insert("max_wordlen".into(), cli.max_wordlen as i64);
            report.push_truncated(
                "cone-acyclic",
                rep.interior_acyclic,
                format!("cone dims {:?}, edges {:?}", rep.cone.dims, rep.cone.edges),
                trunc,
            );
            report.outputs.insert("cone".into(), homology_to_json(&rep.cone));
            for k in &rep.cone.edges {
                report.push_edge(&format!("degree {k}"), "window edge: lower bound only");
            }
            Ok(report)
        }
        Command::PolyhochCheck { tensors, m } => {
            let mut report = Report::new("polyhoch-check");
            let text = std::fs::read_to_string(tensors)?;
            report.digest_input("tensors", text.as_bytes());
            report.set_config("m", m);
            let (cat, delta) = parse_fin_cat(&text)?;
            let mu = polyhoch::mu_collection(&cat, *m, 8)?;
            let br = polyhoch::ph_bracket(&cat, &mu, &mu)?;
            report.push("mu-squared", br.is_zero(), "{𝝁,𝝁} = 0 iff the A∞ relations hold");
            if let Some(delta) = delta {
                if *m != -1 {
                    return Err(Error::BadInput("the bialgebra calculus runs at m = -1".into()));
                }
                let eqs = repfunctor_free(&cat, &delta)?;
                let pi = polyhoch::inf_bialg_encode(&cat, &delta, 8)?;
                let pibr = polyhoch::ph_bracket(&cat, &pi, &pi)?;
                use Polarity::{In, Out};
                let comps = [
                    ("assoc", eqs.assoc, polyhoch::component_is_zero(&pibr, &[Out, In, In, In])),
                    ("coassoc", eqs.coassoc, polyhoch::component_is_zero(&pibr, &[Out, Out, Out, In])),
                    ("eq1", eqs.eq1, polyhoch::component_is_zero(&pibr, &[Out, Out, In, In])),
                    ("eq2", eqs.eq2, polyhoch::component_is_zero(&pibr, &[Out, In, Out, In])),
                ];
                for (name, direct, disk) in comps {
                    report.push(&format!("{name}:direct"), direct, "structure-tensor expansion");
                    report.push(
                        &format!("{name}:equivalence"),
                        direct == disk,
                        "verdict matches the disk component of ½{π,π}",
                    );
                }
            }
            Ok(report)
        }
        Command::Rep { file, dim } => {
            let mut report = Report::new("rep");
            let pres = load_presentation(&mut report, file)?;
            if pres.arrows.iter().any(|a| a.degree < 0) {
                return Err(Error::NegativeDegree(
                    pres.arrows.iter().find(|a| a.degree < 0).unwrap().name.clone(),
                ));
            }
            let dims = parse_dims(&pres, dim)?;
            report.set_config("dim", dim);
            let world = RepWorld::new(&pres, dims, 0)?;
            report.push("d-squared", world.cdga.validate_d_squared().is_ok(), "A_V is a CDGA");
            let gens: Vec<serde_json::Value> = world
                .cdga
                .gens
                .iter()
                .zip(world.cdga.diff.iter())
                .filter(|(g, _)| !g.name.contains("sD(") && !g.name.contains("Xhat(") && !g.name.starts_with("E_") && !g.name.starts_with("th_"))
                .map(|(g, d)| {
                    serde_json::json!({
                        "name": g.name,
                        "degree": g.degree,
                        "diff": world.cdga.format(d),
                    })
                })
                .collect();
            report.outputs.insert("generators".into(), serde_json::Value::Array(gens));
            Ok(report)
        }
        Command::Vdb { file, dim, module } => {
            let mut report = Report::new("vdb");
            let pres = load_presentation(&mut report, file)?;
            let dims = parse_dims(&pres, dim)?;
            report.set_config("dim", dim);
            report.set_config("module", module);
            let world = RepWorld::new(&pres, dims, 0)?;
            let m = match module.as_str() {
                "omega1" => bimodule::omega1(&pres)?,
                "res" => world.res.module.clone(),
                other => return Err(Error::BadInput(format!("unknown module `{other}`"))),
            };
            let eq = repfunctor::vdb(&world, &m)?;
            let mut ok = true;
            for k in 0..eq.basis.len() {
                let mut e: repfunctor::ModElement = repfunctor::ModElement::new();
                e.insert(k, repfunctor::CPoly::one());
                if !eq.d(&eq.d(&e)).is_empty() {
                    ok = false;
                }
            }
            report.push("d-squared", ok, format!("{} basis elements", eq.basis.len()));
            let basis: Vec<serde_json::Value> = eq
                .basis
                .iter()
                .map(|&(b, i, j)| {
                    serde_json::json!({
                        "letter": m.basis[b].label,
                        "row": i + 1,
                        "col": j + 1,
                        "degree": m.basis[b].degree,
                    })
                })
                .collect();
            report.outputs.insert("basis".into(), serde_json::Value::Array(basis));
            Ok(report)
        }
        Command::Trace { file, elem, dim } => {
            let mut report = Report::new("trace");
            let pres = load_presentation(&mut report, file)?;
            let dims = parse_dims(&pres, dim)?;
            report.set_config("dim", dim);
            let world = RepWorld::new(&pres, dims, 0)?;
            let mctx = MixedCtx::new(&pres)?;
            let text = std::fs::read_to_string(elem)?;
            report.digest_input("elem", text.as_bytes());
            let mut total = repfunctor::CPoly::zero();
            let mut b_total = repfunctor::CPoly::zero();
            let mut cls_total = CycElement::zero();
            for (w, c) in parse_element_words(&mctx.tc.pres, &text)? {
                let cls = CycElement::from_word(&mctx.tc, &w, c)?;
                cls_total = cls_total.add(&cls);
            }
            for (w, c) in &cls_total.terms {
                total = total.add(&repfunctor::trace_psi(&world, &mctx, w)?.scale(c));
            }
            for (w, c) in &mctx.b_map(&cls_total)?.terms {
                b_total = b_total.add(&repfunctor::trace_psi(&world, &mctx, w)?.scale(c));
            }
            report.push("gl-invariant", world.is_gl_invariant(&total), "δ_θ(Ψ(w)) = 0");
            report.push(
                "mixed-compatible",
                b_total == world.cartan_sd(&total),
                "Ψ∘B = sD̃∘Ψ on the input",
            );
            report
                .outputs
                .insert("trace".into(), serde_json::Value::String(world.cdga.format(&total)));
            Ok(report)
        }
        Command::PsidaggerCheck { file, dim, m } => {
            let mut report = Report::new("psidagger-check");
            let pres = load_presentation(&mut report, file)?;
            let dims = parse_dims(&pres, dim)?;
            report.set_config("dim", dim);
            report.set_config("m", m);
            report.set_config("seed", cli.seed);
            report.set_config("samples", cli.samples);
            let world = RepWorld::new(&pres, dims, *m)?;
            let nctx = NecklaceCtx::new(&pres, *m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut tested = 0usize;
            let mut lie_fail = 0usize;
            let mut d_fail = 0usize;
            let mut guard = 0usize;
            let tr = |e: &NecklaceElement| -> Result<repfunctor::CPoly> {
                let mut out = repfunctor::CPoly::zero();
                for (w, c) in &e.terms {
                    out = out.add(&repfunctor::psi_dagger_necklace(&world, &nctx.comp, w)?.scale(c));
                }
                Ok(out)
            };
            while tested < cli.samples && guard < cli.samples * 60 {
                guard += 1;
                let Some(wa) =
                    sample_endo_word(&nctx.comp.tc, &mut rng, cli.max_wordlen.min(4), 2)
                else {
                    continue;
                };
                let Some(wb) =
                    sample_endo_word(&nctx.comp.tc, &mut rng, cli.max_wordlen.min(4), 2)
                else {
                    continue;
                };
                let a = nctx.from_word(&wa, qi(1))?;
                let b = nctx.from_word(&wb, qi(1))?;
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                tested += 1;
                let lhs = repfunctor::cartan_bracket(&world, &tr(&a)?, &tr(&b)?);
                let rhs = tr(&nctx.bracket(&a, &b)?)?;
                if lhs != rhs {
                    lie_fail += 1;
                }
                if world.cdga.d(&tr(&a)?) != tr(&nctx.diff(&a)?)? {
                    d_fail += 1;
                }
            }
            report.push("lie-map", lie_fail == 0, format!("{lie_fail} failures over {tested} pairs"));
            report.push("d-compatible", d_fail == 0, format!("{d_fail} failures over {tested} pairs"));
            Ok(report)
        }
        Command::Homology { file, weight, upsilon } => {
            let mut report = Report::new("homology");
            let pres = load_presentation(&mut report, file)?;
            pres.validate_d_squared()?;
            report.set_config("weight", weight);
            report.set_config("upsilon", upsilon);
            report.set_config("deg_min", cli.deg_min);
            report.set_config("deg_max", cli.deg_max);
            report.set_config("max_wordlen", cli.max_wordlen);
            let ctx = MixedCtx::new(&pres)?;
            let h = ctx.truncated_homology(*weight, cli.deg_min, cli.deg_max, cli.max_wordlen, *upsilon)?;
            let mut trunc = BTreeMap::new();
            trunc.insert("deg_min".into(), cli.deg_min);
            trunc.insert("deg_max".into(), cli.deg_max);
            trunc.insert("max_wordlen".into(), cli.max_wordlen as i64);
            report.push_truncated("homology", true, format!("dims {:?}", h.dims), trunc);
            for k in &h.edges {
                report.push_edge(&format!("degree {k}"), "window edge: lower bound only");
            }
            report.outputs.insert("homology".into(), homology_to_json(&h));
            Ok(report)
        }
    }
}

type DeltaMap = BTreeMap<usize, Vec<(usize, usize, Q)>>;

/// Direct-expansion verdicts of the bialgebra equations.
fn repfunctor_free(cat: &FinGradedCat, delta: &DeltaMap) -> Result<polyhoch::InfBialgReport> {
    polyhoch::inf_bialg_equations(cat, delta)
}

#[derive(serde::Deserialize)]
struct FinCatJson {
    basis: Vec<String>,
    degrees: Vec<i64>,
    #[serde(default)]
    mu: Vec<(usize, usize, usize, String)>,
    #[serde(default)]
    d: Vec<(usize, usize, String)>,
    #[serde(default)]
    delta: Vec<(usize, usize, usize, String)>,
}

/// One-object finite graded category with optional Δ:
/// `mu` rows are (g, f, k, coeff) meaning g·f ∋ coeff·e_k.
fn parse_fin_cat(text: &str) -> Result<(FinGradedCat, Option<DeltaMap>)> {
    let data: FinCatJson = serde_json::from_str(text)?;
    if data.basis.len() != data.degrees.len() {
        return Err(Error::BadInput("basis and degrees must have the same length".into()));
    }
    let mut cat = FinGradedCat::default();
    cat.objects.push("pt".into());
    cat.hom.insert(
        (0, 0),
        data.basis.iter().zip(data.degrees.iter()).map(|(n, d)| (n.clone(), *d)).collect(),
    );
    for (g, f, k, c) in &data.mu {
        cat.mu.entry(((0, 0, *f), (0, 0, *g))).or_default().push((*k, parse_q(c)?));
    }
    for (i, k, c) in &data.d {
        cat.diff.entry((0, 0, *i)).or_default().push((*k, parse_q(c)?));
    }
    let delta = if data.delta.is_empty() {
        None
    } else {
        let mut m: DeltaMap = BTreeMap::new();
        for (f, u, v, c) in &data.delta {
            m.entry(*f).or_default().push((*u, *v, parse_q(c)?));
        }
        Some(m)
    };
    Ok((cat, delta))
}
