//! Jones-calculus model of the photonic implementation.
//!
//! The weak measurement is carried out on single-photon polarization by a
//! Mach-Zehnder interferometer built from two polarizing beam displacers. The
//! first displacer splits horizontal and vertical components into parallel
//! paths, one half-wave plate per arm maps both paths onto a common
//! polarization, a plate spanning both arms (angle `theta`) sets the
//! measurement strength, and the second displacer recombines one exit that
//! continues to the rest of the train, followed by a fixed plate at `pi/4`.
//! A settings plate before the block and one after it (followed by a linear
//! polarizer) select the prepared state, the measured bases and the outcomes.
//!
//! Conventions: `|H> = (1, 0)`, `|V> = (0, 1)`; a half-wave plate at angle
//! `a` has Jones matrix `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`. The analyzer
//! transmits `V` and the interferometer recombines its two path amplitudes
//! with a relative half-wave phase; both conventions are calibrated once
//! against the bundled angle table and then hold for every row.

use crate::protocol::{BasisChoice, InputPair, JointDistribution, ProtocolError};
use crate::qmath::Mat2;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use thiserror::Error;

/// Tolerance for comparing train probabilities against the protocol oracle.
pub const TRAIN_MATCH_TOL: f64 = 1e-9;

/// Relative phase picked up between the two recombined path amplitudes,
/// fixed by the angle-table calibration.
const RECOMBINATION_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("settings table has {found} rows, expected 64")]
    WrongRowCount { found: usize },
    #[error("settings {0:?} appear more than once")]
    DuplicateSettings([u8; 6]),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Jones matrix of an ideal half-wave plate with its fast axis at `angle`
/// radians from horizontal: Hermitian, unitary, determinant -1.
pub fn hwp_matrix(angle: f64) -> Mat2 {
    let (s, c) = (2.0 * angle).sin_cos();
    Mat2::from_real(c, s, s, -c)
}

/// Geometry of the interferometer block for one strength setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziConfig {
    /// Angle of the plate spanning both arms; sets the strength.
    pub theta: f64,
    /// Arm plate on the horizontal-polarization path.
    pub arm_h_angle: f64,
    /// Arm plate on the vertical-polarization path.
    pub arm_v_angle: f64,
    /// Fixed plate after the recombining displacer.
    pub post_hwp_angle: f64,
}

impl MziConfig {
    /// Standard geometry for measurement strength `eta`: arm plates at 0 and
    /// `pi/4`, `theta = (pi - arccos eta) / 4`, so `theta` runs over
    /// `[pi/8, pi/4]`.
    pub fn for_strength(strength: f64) -> Result<Self, OpticsError> {
        Self::with_arm_angle(FRAC_PI_4, strength)
    }

    /// Alternative geometry with the vertical-arm plate at `alpha`: the arm
    /// plates sit at `alpha - pi/4` and `alpha`, and
    /// `theta = alpha - arccos(eta) / 4`. The effective operator does not
    /// depend on `alpha`.
    pub fn with_arm_angle(alpha: f64, strength: f64) -> Result<Self, OpticsError> {
        if !(0.0..=1.0).contains(&strength) || strength.is_nan() {
            return Err(ProtocolError::StrengthOutOfRange { value: strength }.into());
        }
        let theta = alpha - strength.clamp(-1.0, 1.0).acos() / 4.0;
        Ok(Self {
            theta,
            arm_h_angle: alpha - FRAC_PI_4,
            arm_v_angle: alpha,
            post_hwp_angle: FRAC_PI_4,
        })
    }
}

/// Raw polarization operator of the continuing interferometer exit, before
/// the fixed post plate, by brute-force composition of the elements.
///
/// The displacers route the horizontal input component through the H arm and
/// the vertical one through the V arm; the continuing exit collects the
/// vertical amplitude of the H arm and the horizontal amplitude of the V arm.
pub fn port_operator(cfg: &MziConfig) -> Mat2 {
    let through_v = hwp_matrix(cfg.theta) * hwp_matrix(cfg.arm_v_angle);
    let through_h = hwp_matrix(cfg.theta) * hwp_matrix(cfg.arm_h_angle);
    let mut out = Mat2::zero();
    out.m[0][1] = through_v.m[0][1];
    out.m[1][0] = through_h.m[1][0] * RECOMBINATION_SIGN;
    out
}

/// Reflection folded into the settings plate ahead of the block.
fn frame_in() -> Mat2 {
    hwp_matrix(FRAC_PI_8)
}

/// Rotation folded into the settings plate behind the block.
fn frame_out() -> Mat2 {
    Mat2::from_real(-1.0, 1.0, -1.0, -1.0).scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Effective weak-measurement operator of the interferometer block (with its
/// post plate), expressed in the protocol basis.
///
/// The physical exit operator is diagonal in the basis the interferometer
/// sorts; the fixed basis-change plates that the experiment folds into the
/// two adjacent settings plates dress it back into the protocol frame. For
/// `theta = (pi - arccos eta) / 4` the result is the outcome-0 Kraus operator
/// of the strength-`eta` X measurement, up to global phase.
pub fn mzi_operator(cfg: &MziConfig) -> Mat2 {
    frame_out() * hwp_matrix(cfg.post_hwp_angle) * port_operator(cfg) * frame_in()
}

/// One line of the settings table: which input, bases and outcomes the two
/// settings plates select, and their angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsRow {
    pub x0: bool,
    pub x1: bool,
    pub y: bool,
    pub b: bool,
    pub z: bool,
    pub c: bool,
    /// Plate between preparation and the interferometer (radians).
    pub hwp_ab_angle: f64,
    /// Plate between the interferometer and the analyzer (radians).
    pub hwp_bc_angle: f64,
}

impl SettingsRow {
    pub fn bits(&self) -> [u8; 6] {
        [
            self.x0 as u8,
            self.x1 as u8,
            self.y as u8,
            self.b as u8,
            self.z as u8,
            self.c as u8,
        ]
    }

    fn input(&self) -> InputPair {
        InputPair::new(self.x0, self.x1)
    }

    fn bob_basis(&self) -> BasisChoice {
        if self.y {
            BasisChoice::Z
        } else {
            BasisChoice::X
        }
    }

    fn charlie_basis(&self) -> BasisChoice {
        if self.z {
            BasisChoice::Z
        } else {
            BasisChoice::X
        }
    }
}

/// Full train for one settings row: settings plate, interferometer block,
/// settings plate. The analyzer projection is applied separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hwp_ab_angle: f64,
    pub mzi: MziConfig,
    pub hwp_bc_angle: f64,
}

impl TrainConfig {
    pub fn new(row: &SettingsRow, strength: f64) -> Result<Self, OpticsError> {
        Ok(Self {
            hwp_ab_angle: row.hwp_ab_angle,
            mzi: MziConfig::for_strength(strength)?,
            hwp_bc_angle: row.hwp_bc_angle,
        })
    }

    /// Effective operator from the train input to the analyzer input.
    pub fn operator(&self) -> Mat2 {
        hwp_matrix(self.hwp_bc_angle)
            * hwp_matrix(self.mzi.post_hwp_angle)
            * port_operator(&self.mzi)
            * hwp_matrix(self.hwp_ab_angle)
    }
}

/// Detection probability for one settings row at the given strength: send
/// `|H>` through the train and keep the squared amplitude the analyzer
/// transmits.
///
/// Matches the protocol's `p(b, c | x, y, z)` for every row of the bundled
/// angle table; [`verify_angle_table`] checks exactly that.
pub fn train_probability(row: &SettingsRow, strength: f64) -> Result<f64, OpticsError> {
    let train = TrainConfig::new(row, strength)?;
    let out = train.operator().apply([1.0.into(), 0.0.into()]);
    Ok(out[1].norm_sqr())
}

/// Per-row outcome of an angle-table verification.
#[derive(Debug, Clone, Copy)]
pub struct RowCheck {
    pub row: SettingsRow,
    /// Largest |train - oracle| probability deviation over the strengths.
    pub max_deviation: f64,
    /// Strength at which the largest deviation occurred.
    pub worst_strength: f64,
}

impl RowCheck {
    pub fn passed(&self) -> bool {
        self.max_deviation <= TRAIN_MATCH_TOL
    }
}

/// Result of checking a settings table against the protocol oracle.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// Number of (row, strength) probability comparisons performed.
    pub checks: usize,
    pub rows: Vec<RowCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(RowCheck::passed)
    }

    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.max_deviation)
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowCheck> {
        self.rows.iter().filter(|r| !r.passed())
    }
}

/// Checks that every row of a 64-line settings table reproduces the protocol
/// outcome probabilities at every supplied strength, to [`TRAIN_MATCH_TOL`].
///
/// The table must cover all 64 bit combinations exactly once. An empty
/// strength list yields an empty report.
pub fn verify_angle_table(
    rows: &[SettingsRow],
    strengths: &[f64],
) -> Result<VerifyReport, OpticsError> {
    if rows.len() != 64 {
        return Err(OpticsError::WrongRowCount { found: rows.len() });
    }
    let mut seen = [false; 64];
    for row in rows {
        let bits = row.bits();
        let key = bits.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
        if seen[key] {
            return Err(OpticsError::DuplicateSettings(bits));
        }
        seen[key] = true;
    }
    if strengths.is_empty() {
        return Ok(VerifyReport {
            checks: 0,
            rows: Vec::new(),
        });
    }

    let oracles = strengths
        .iter()
        .map(|&eta| JointDistribution::new(eta))
        .collect::<Result<Vec<_>, _>>()?;

    use rayon::prelude::*;
    let checks = rows.len() * strengths.len();
    let rows = rows
        .par_iter()
        .map(|row| {
            let mut worst = (0.0f64, strengths[0]);
            for (dist, &eta) in oracles.iter().zip(strengths) {
                let expected = dist.prob(
                    row.input(),
                    row.bob_basis(),
                    row.charlie_basis(),
                    row.b,
                    row.c,
                );
                let got = train_probability(row, eta).expect("strength validated above");
                let dev = (got - expected).abs();
                if dev > worst.0 {
                    worst = (dev, eta);
                }
            }
            RowCheck {
                row: *row,
                max_deviation: worst.0,
                worst_strength: worst.1,
            }
        })
        .collect();

    Ok(VerifyReport { checks, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::WeakMeasurement;
    use crate::qmath::{equal_up_to_global_phase, pauli, Axis, Mat2, PHASE_TOL};
    use std::f64::consts::PI;

    const TOL: f64 = 1e-12;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Outcome-0 X-basis Kraus operator, the reference for the block.
    fn kraus_x0(strength: f64) -> Mat2 {
        WeakMeasurement::new(crate::protocol::BasisChoice::X, strength)
            .unwrap()
            .kraus(false)
    }

    fn fixture_rows() -> Vec<SettingsRow> {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/table1.csv");
        let mut reader = csv::Reader::from_path(path).expect("fixture present");
        let mut rows: Vec<SettingsRow> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for record in reader.records() {
            let r = record.unwrap();
            let bit = |i: usize| r[i].parse::<u8>().unwrap() != 0;
            let row = SettingsRow {
                x0: bit(0),
                x1: bit(1),
                y: bit(2),
                b: bit(3),
                z: bit(4),
                c: bit(5),
                hwp_ab_angle: r[6].parse().unwrap(),
                hwp_bc_angle: r[7].parse().unwrap(),
            };
            if seen.insert(row.bits()) {
                rows.push(row);
            }
        }
        assert_eq!(rows.len(), 64);
        rows
    }

    #[test]
    fn hwp_matrix_landmarks() {
        assert!((hwp_matrix(0.0) - Mat2::from_real(1.0, 0.0, 0.0, -1.0)).max_abs() <= TOL);
        assert!((hwp_matrix(FRAC_PI_4) - pauli(Axis::X)).max_abs() <= TOL);
        let hadamard = Mat2::from_real(1.0, 1.0, 1.0, -1.0).scale(1.0 / 2.0_f64.sqrt());
        assert!((hwp_matrix(FRAC_PI_8) - hadamard).max_abs() <= TOL);
    }

    #[test]
    fn hwp_matrix_is_a_unitary_reflection() {
        for i in 0..32 {
            let angle = i as f64 * PI / 16.0 - PI;
            let h = hwp_matrix(angle);
            assert!(h.is_hermitian(TOL));
            assert!(((h * h) - Mat2::identity()).max_abs() <= TOL);
            assert_close(h.det().re, -1.0, TOL);
        }
    }

    #[test]
    fn block_matches_kraus_operator() {
        for i in 0..20 {
            let eta = i as f64 / 19.0;
            let cfg = MziConfig::for_strength(eta).unwrap();
            assert!(cfg.theta >= FRAC_PI_8 - TOL && cfg.theta <= FRAC_PI_4 + TOL);
            let block = mzi_operator(&cfg);
            assert!(
                equal_up_to_global_phase(&block, &kraus_x0(eta), PHASE_TOL),
                "eta={eta}"
            );
        }
        // Half strength: theta = (pi - arccos(1/2)) / 4.
        let half = mzi_operator(&MziConfig::for_strength(0.5).unwrap());
        assert!(equal_up_to_global_phase(&half, &kraus_x0(0.5), PHASE_TOL));
        // Doubling one side breaks the comparison.
        assert!(!equal_up_to_global_phase(
            &half.scale(2.0),
            &kraus_x0(0.5),
            PHASE_TOL
        ));
    }

    #[test]
    fn block_limits() {
        // Full strength: a projector onto the +1 eigenstate.
        let strong = mzi_operator(&MziConfig::for_strength(1.0).unwrap());
        let plus = crate::protocol::projector(crate::protocol::BasisChoice::X, false);
        assert!(equal_up_to_global_phase(&strong, &plus, PHASE_TOL));

        // Zero strength: proportional to the identity, no information gained.
        let silent = mzi_operator(&MziConfig::for_strength(0.0).unwrap());
        assert!(silent.m[0][1].norm() <= TOL && silent.m[1][0].norm() <= TOL);
        assert_close(silent.m[0][0].norm(), silent.m[1][1].norm(), TOL);
    }

    #[test]
    fn alternate_arm_angle_is_equivalent() {
        for i in 0..20 {
            let eta = i as f64 / 19.0;
            let standard = port_operator(&MziConfig::for_strength(eta).unwrap());
            let tilted = port_operator(&MziConfig::with_arm_angle(FRAC_PI_8, eta).unwrap());
            assert!(
                equal_up_to_global_phase(&standard, &tilted, PHASE_TOL),
                "eta={eta}"
            );
        }
    }

    #[test]
    fn operators_stay_physical() {
        let rows = fixture_rows();
        for i in 0..6 {
            let eta = i as f64 / 5.0;
            let cfg = MziConfig::for_strength(eta).unwrap();
            assert!(port_operator(&cfg).op_norm() <= 1.0 + TOL);
            for row in rows.iter().step_by(7) {
                let train = TrainConfig::new(row, eta).unwrap();
                assert!(train.operator().op_norm() <= 1.0 + TOL);
            }
        }
    }

    #[test]
    fn reference_row_at_full_strength() {
        let rows = fixture_rows();
        let first = rows.iter().find(|r| r.bits() == [0; 6]).unwrap();
        let p = train_probability(first, 1.0).unwrap();
        assert_close(p, (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0, TOL);

        // Same settings, opposite analyzer outcome: dark port.
        let second = rows.iter().find(|r| r.bits() == [0, 0, 0, 0, 0, 1]).unwrap();
        assert_close(train_probability(second, 1.0).unwrap(), 0.0, TOL);
    }

    #[test]
    fn row_groups_are_normalized() {
        let rows = fixture_rows();
        for eta in [0.0, 0.35, 0.8, 1.0] {
            for x0 in [false, true] {
                for x1 in [false, true] {
                    for y in [false, true] {
                        for z in [false, true] {
                            let total: f64 = rows
                                .iter()
                                .filter(|r| {
                                    r.x0 == x0 && r.x1 == x1 && r.y == y && r.z == z
                                })
                                .map(|r| train_probability(r, eta).unwrap())
                                .sum();
                            assert_close(total, 1.0, 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn full_table_verifies_against_oracle() {
        let rows = fixture_rows();
        let strengths: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let report = verify_angle_table(&rows, &strengths).unwrap();
        assert_eq!(report.checks, 704);
        assert!(
            report.passed(),
            "max deviation {:.3e}",
            report.max_deviation()
        );
    }

    #[test]
    fn corrupted_angle_is_detected() {
        let mut rows = fixture_rows();
        rows[10].hwp_bc_angle += PI / 16.0;
        let report = verify_angle_table(&rows, &[0.5]).unwrap();
        assert!(!report.passed());
        let failing: Vec<_> = report.failures().collect();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].row.bits(), rows[10].bits());
    }

    #[test]
    fn empty_strength_list_gives_empty_report() {
        let rows = fixture_rows();
        let report = verify_angle_table(&rows, &[]).unwrap();
        assert_eq!(report.checks, 0);
        assert!(report.rows.is_empty());
        assert!(report.passed());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let rows = fixture_rows();
        assert!(matches!(
            verify_angle_table(&rows[..10], &[0.5]),
            Err(OpticsError::WrongRowCount { found: 10 })
        ));

        let mut dupe = rows.clone();
        dupe[1] = dupe[0];
        assert!(matches!(
            verify_angle_table(&dupe, &[0.5]),
            Err(OpticsError::DuplicateSettings(_))
        ));
    }
}
