//! JSON formats for tuples, pencils, verdicts and reports.
//!
//! Tuples are `{"d": 2, "n": 2, "mats": [...]}` with `mats[j][r][c] = [re, im]`.
//! Every float is written with 17 significant digits so that a save/load
//! round trip is bit-exact.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::convexity::{ChoiCertificate, Halfspaces, MembershipVerdict, Pencil, PolytopeBody, Status};
use crate::decomp::BlockDecomposition;
use crate::error::{Error, Result};
use crate::extreme::{Certificate, EquivalenceWitness, MinimalReport, SummandReport, SummandStatus};
use crate::linalg::{self, ComplexMatrix};
use crate::matcore::MatrixTuple;
use crate::sdp::{Constraint, DualCertificate, SdpOutcome, SdpProblem, SdpStatus};

/// A float serialized as `{:.16e}`; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub type MatrixJson = Vec<Vec<[Num; 2]>>;

pub fn matrix_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [Num(m[(r, c)].re), Num(m[(r, c)].im)]).collect())
        .collect()
}

#[derive(Serialize)]
pub struct TupleJson {
    pub d: usize,
    pub n: usize,
    pub mats: Vec<MatrixJson>,
}

pub fn tuple_json(t: &MatrixTuple) -> TupleJson {
    TupleJson { d: t.d(), n: t.n(), mats: t.mats().iter().map(matrix_json).collect() }
}

#[derive(Deserialize)]
struct TupleIn {
    d: usize,
    n: usize,
    mats: Vec<Vec<Vec<[f64; 2]>>>,
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e} (line {}, column {})", e.line(), e.column())))
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], side: usize, label: &str) -> Result<ComplexMatrix> {
    if rows.len() != side {
        return Err(Error::DimensionMismatch(format!("{label} has {} rows, expected {side}", rows.len())));
    }
    let mut m = linalg::zeros(side, side);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != side {
            return Err(Error::DimensionMismatch(format!("{label} row {r} has {} entries, expected {side}", row.len())));
        }
        for (c, [re, im]) in row.iter().enumerate() {
            m[(r, c)] = linalg::c(*re, *im);
        }
    }
    Ok(m)
}

pub fn parse_tuple(text: &str) -> Result<MatrixTuple> {
    let raw: TupleIn = parse_json(text, "tuple")?;
    if raw.mats.len() != raw.d {
        return Err(Error::DimensionMismatch(format!("field d = {} but mats has {} entries", raw.d, raw.mats.len())));
    }
    let mats = raw
        .mats
        .iter()
        .enumerate()
        .map(|(j, rows)| matrix_from_rows(rows, raw.n, &format!("mats[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    MatrixTuple::new(mats)
}

pub fn tuple_to_string(t: &MatrixTuple) -> String {
    serde_json::to_string(&tuple_json(t)).expect("tuple serializes")
}

#[derive(Serialize)]
pub struct PencilJson {
    pub d: usize,
    pub n: usize,
    pub level: usize,
    pub constant: MatrixJson,
    pub mats: Vec<MatrixJson>,
}

pub fn pencil_json(p: &Pencil) -> PencilJson {
    PencilJson {
        d: p.d(),
        n: p.level,
        level: p.level,
        constant: matrix_json(&p.constant),
        mats: p.coeffs.iter().map(matrix_json).collect(),
    }
}

#[derive(Deserialize)]
struct PencilIn {
    level: usize,
    constant: Vec<Vec<[f64; 2]>>,
    mats: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn parse_pencil(text: &str) -> Result<Pencil> {
    let raw: PencilIn = parse_json(text, "pencil")?;
    let constant = matrix_from_rows(&raw.constant, raw.level, "constant")?;
    let coeffs = raw
        .mats
        .iter()
        .enumerate()
        .map(|(j, rows)| matrix_from_rows(rows, raw.level, &format!("mats[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    Pencil::new(constant, coeffs)
}

#[derive(Serialize)]
pub struct ChoiJson {
    pub map_dims: [usize; 2],
    pub choi: MatrixJson,
}

pub fn choi_json(c: &ChoiCertificate) -> ChoiJson {
    ChoiJson { map_dims: [c.map_dims.0, c.map_dims.1], choi: matrix_json(&c.choi) }
}

#[derive(Serialize)]
pub struct VerdictJson {
    pub status: Status,
    pub margin: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ChoiJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separator: Option<PencilJson>,
}

pub fn verdict_json(v: &MembershipVerdict) -> VerdictJson {
    VerdictJson {
        status: v.status,
        margin: Num(v.margin),
        witness: v.witness.as_ref().map(choi_json),
        separator: v.separator.as_ref().map(pencil_json),
    }
}

#[derive(Serialize)]
pub struct BlockJson {
    pub tuple: TupleJson,
    pub multiplicity: usize,
    pub marginal: bool,
}

#[derive(Serialize)]
pub struct DecompositionJson {
    pub unitary: MatrixJson,
    pub residual: Num,
    pub blocks: Vec<BlockJson>,
}

pub fn decomposition_json(d: &BlockDecomposition) -> DecompositionJson {
    DecompositionJson {
        unitary: matrix_json(&d.unitary),
        residual: Num(d.residual()),
        blocks: d
            .blocks
            .iter()
            .map(|b| BlockJson { tuple: tuple_json(&b.tuple), multiplicity: b.multiplicity, marginal: b.marginal })
            .collect(),
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateJson {
    Separator { margin: Num, pencil: PencilJson },
    Witness { witness: ChoiJson },
    Duplicate { of: usize, unitary: MatrixJson },
    Alone,
}

pub fn certificate_json(c: &Certificate) -> CertificateJson {
    match c {
        Certificate::Separator { pencil, margin } => {
            CertificateJson::Separator { margin: Num(*margin), pencil: pencil_json(pencil) }
        }
        Certificate::Witness(w) => CertificateJson::Witness { witness: choi_json(w) },
        Certificate::Duplicate { of, unitary } => CertificateJson::Duplicate { of: *of, unitary: matrix_json(unitary) },
        Certificate::Alone => CertificateJson::Alone,
    }
}

#[derive(Serialize)]
pub struct SummandJson {
    pub status: SummandStatus,
    pub tuple: TupleJson,
    pub exposing_gap: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposing_pencil: Option<PencilJson>,
    pub certificate: CertificateJson,
}

fn summand_json(s: &SummandReport) -> SummandJson {
    SummandJson {
        status: s.status,
        tuple: tuple_json(&s.tuple),
        exposing_gap: s.exposing_gap.map(Num),
        exposing_pencil: s.exposing_pencil.as_ref().map(pencil_json),
        certificate: certificate_json(&s.certificate),
    }
}

#[derive(Serialize)]
pub struct ReportJson {
    pub input: TupleJson,
    pub minimal: TupleJson,
    pub verified: bool,
    pub fully_compressed: bool,
    pub marginal_blocks: bool,
    pub summands: Vec<SummandJson>,
    pub forward: VerdictJson,
    pub backward: VerdictJson,
    pub decomposition: DecompositionJson,
    /// Random points of the first level of the minimal tuple, for plotting.
    pub first_level_samples: Vec<Vec<Num>>,
}

pub fn report_json(r: &MinimalReport, samples: &[Vec<f64>]) -> ReportJson {
    ReportJson {
        input: tuple_json(&r.input),
        minimal: tuple_json(&r.minimal),
        verified: r.verified,
        fully_compressed: r.is_fully_compressed(),
        marginal_blocks: r.marginal_blocks,
        summands: r.summands.iter().map(summand_json).collect(),
        forward: verdict_json(&r.forward),
        backward: verdict_json(&r.backward),
        decomposition: decomposition_json(&r.decomposition),
        first_level_samples: samples.iter().map(|p| p.iter().copied().map(Num).collect()).collect(),
    }
}

#[derive(Serialize)]
pub struct EquivalenceJson {
    pub unitary: MatrixJson,
    pub block_permutation: Vec<usize>,
    pub residual: Num,
}

pub fn equivalence_json(w: &EquivalenceWitness) -> EquivalenceJson {
    EquivalenceJson { unitary: matrix_json(&w.unitary), block_permutation: w.block_permutation.clone(), residual: Num(w.residual) }
}

#[derive(Deserialize)]
struct PolytopeIn {
    vertices: Vec<Vec<f64>>,
}

pub fn parse_polytope(text: &str) -> Result<PolytopeBody> {
    let raw: PolytopeIn = parse_json(text, "polytope")?;
    PolytopeBody::new(raw.vertices)
}

#[derive(Deserialize)]
struct HalfspaceRow {
    a: Vec<f64>,
    b: f64,
}

#[derive(Deserialize)]
struct HalfspacesIn {
    halfspaces: Vec<HalfspaceRow>,
}

pub fn parse_halfspaces(text: &str) -> Result<Halfspaces> {
    let raw: HalfspacesIn = parse_json(text, "halfspaces")?;
    Halfspaces::new(raw.halfspaces.into_iter().map(|r| (r.a, r.b)).collect())
}

#[derive(Serialize)]
pub struct ConstraintJson {
    pub matrix: MatrixJson,
    pub rhs: Num,
}

#[derive(Serialize)]
pub struct ProblemJson {
    pub psd_side: usize,
    pub objective: Option<MatrixJson>,
    pub constraints: Vec<ConstraintJson>,
}

pub fn problem_json(p: &SdpProblem) -> ProblemJson {
    ProblemJson {
        psd_side: p.psd_side,
        objective: p.objective.as_ref().map(matrix_json),
        constraints: p.constraints.iter().map(|c| ConstraintJson { matrix: matrix_json(&c.matrix), rhs: Num(c.rhs) }).collect(),
    }
}

#[derive(Deserialize)]
struct ConstraintIn {
    matrix: Vec<Vec<[f64; 2]>>,
    rhs: f64,
}

#[derive(Deserialize)]
struct ProblemIn {
    psd_side: usize,
    objective: Option<Vec<Vec<[f64; 2]>>>,
    constraints: Vec<ConstraintIn>,
}

pub fn parse_problem(text: &str) -> Result<SdpProblem> {
    let raw: ProblemIn = parse_json(text, "problem")?;
    let side = raw.psd_side;
    let objective = raw.objective.as_ref().map(|o| matrix_from_rows(o, side, "objective")).transpose()?;
    let constraints = raw
        .constraints
        .iter()
        .enumerate()
        .map(|(k, c)| Ok(Constraint { matrix: matrix_from_rows(&c.matrix, side, &format!("constraints[{k}]"))?, rhs: c.rhs }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SdpProblem { psd_side: side, objective, constraints })
}

#[derive(Serialize)]
pub struct DualJson {
    pub multipliers: Vec<Num>,
    pub bound_multiplier: Num,
    pub bound: Num,
    pub slack: MatrixJson,
}

#[derive(Serialize)]
pub struct OutcomeJson {
    pub status: SdpStatus,
    pub margin: Num,
    pub primal: Option<MatrixJson>,
    pub dual_certificate: Option<DualJson>,
    pub objective_value: Option<Num>,
    pub dual_bound: Option<Num>,
}

pub fn outcome_json(o: &SdpOutcome) -> OutcomeJson {
    OutcomeJson {
        status: o.status,
        margin: Num(o.margin),
        primal: o.primal.as_ref().map(matrix_json),
        dual_certificate: o.dual_certificate.as_ref().map(|d: &DualCertificate| DualJson {
            multipliers: d.multipliers.iter().copied().map(Num).collect(),
            bound_multiplier: Num(d.bound_multiplier),
            bound: Num(d.bound),
            slack: matrix_json(&d.slack),
        }),
        objective_value: o.objective_value.map(Num),
        dual_bound: o.dual_bound.map(Num),
    }
}

#[derive(Deserialize)]
struct DualIn {
    multipliers: Vec<f64>,
}

#[derive(Deserialize)]
struct OutcomeIn {
    dual_certificate: Option<DualIn>,
}

/// Farkas multipliers from an outcome dump.
pub fn parse_outcome_multipliers(text: &str) -> Result<Option<Vec<f64>>> {
    let raw: OutcomeIn = parse_json(text, "outcome")?;
    Ok(raw.dual_certificate.map(|d| d.multipliers))
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;
    use crate::random::random_tuple;
    use crate::sdp::{solve, SdpOptions};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_file_loads() {
        let text = r#"{"d": 2, "n": 2, "mats": [
            [[[1,0],[0,0]],[[0,0],[-1,0]]],
            [[[0,0],[1,0]],[[1,0],[0,0]]]
        ]}"#;
        let t = parse_tuple(text).unwrap();
        assert_eq!((t.d(), t.n()), (2, 2));
        assert!(t.is_hermitian(1e-12));
    }

    #[test]
    fn wrong_shape_names_index() {
        let text = r#"{"d": 2, "n": 2, "mats": [
            [[[1,0],[0,0]],[[0,0],[-1,0]]],
            [[[0,0],[1,0],[0,0]],[[1,0],[0,0]]]
        ]}"#;
        match parse_tuple(text) {
            Err(Error::DimensionMismatch(msg)) => assert!(msg.contains("mats[1]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_has_position() {
        match parse_tuple("{\"d\": 1,\n \"n\": }") {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn seventeen_digits() {
        let s = serde_json::to_string(&Num(0.1)).unwrap();
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(serde_json::to_string(&Num(f64::NAN)).unwrap(), "null");
    }

    #[test]
    fn round_trip_thousand_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..1000 {
            let t = random_tuple(&mut rng, 1 + k % 3, 1 + k % 4, k % 2 == 0);
            let back = parse_tuple(&tuple_to_string(&t)).unwrap();
            for (a, b) in t.mats().iter().zip(back.mats()) {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.re.to_bits(), y.re.to_bits());
                    assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }

    #[test]
    fn problem_and_certificate_round_trip() {
        let p = SdpProblem::feasibility(
            2,
            vec![
                Constraint { matrix: linalg::identity(2), rhs: 1.0 },
                Constraint { matrix: diag_real(&[1.0, 0.0]), rhs: 2.0 },
            ],
        );
        let text = serde_json::to_string(&problem_json(&p)).unwrap();
        let back = parse_problem(&text).unwrap();
        assert_eq!(back.psd_side, 2);
        for (a, b) in p.constraints.iter().zip(&back.constraints) {
            assert_eq!(a.matrix, b.matrix);
            assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
        }
        let out = solve(&p, &SdpOptions::default()).unwrap();
        let dump = serde_json::to_string(&outcome_json(&out)).unwrap();
        let y = parse_outcome_multipliers(&dump).unwrap().unwrap();
        let orig = &out.dual_certificate.unwrap().multipliers;
        assert!(y.iter().zip(orig).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn pencil_round_trip() {
        let p = Pencil::new(diag_real(&[0.5]), vec![diag_real(&[1.0]), diag_real(&[-0.25])]).unwrap();
        let text = serde_json::to_string(&pencil_json(&p)).unwrap();
        assert!(text.contains("\"level\":1"));
        assert_eq!(parse_pencil(&text).unwrap(), p);
    }

    #[test]
    fn polytope_files() {
        let k = parse_polytope(r#"{"vertices": [[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(k.dim, 2);
        let h = parse_halfspaces(r#"{"halfspaces": [{"a": [1, 0], "b": 1}]}"#).unwrap();
        assert_eq!(h.rows.len(), 1);
        assert!(parse_halfspaces(r#"{"halfspaces": []}"#).is_err());
    }

    proptest! {
        #[test]
        fn float_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = serde_json::to_string(&Num(x)).unwrap();
            let y: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
