//! Joint implicit-explicit ESDIRK Butcher tableaus.
//!
//! An IMEX Runge-Kutta method pairs an ESDIRK tableau (explicit first
//! stage, constant diagonal γ from stage 2 on) with a strictly
//! lower-triangular explicit tableau. Both sides share the abscissae `c`
//! and the weights `b`:
//!
//! ```text
//!  c₁ |                        ||  c₁ |
//!  c₂ |  a₂₁   γ               ||  c₂ |  â₂₁
//!  ⋮  |   ⋮     ⋱    γ         ||  ⋮  |   ⋮     ⋱
//!  cₛ |  aₛ₁   ⋯   aₛ,ₛ₋₁  γ   ||  cₛ |  âₛ₁   ⋯   âₛ,ₛ₋₁
//! ----+------------------------++-----+---------------------
//!     |  b₁    ⋯   bₛ₋₁    bₛ  ||     |  b₁    ⋯   bₛ₋₁    bₛ
//! ```
//!
//! Shipped schemes: the 2-stage second-order CNH combination of
//! Crank-Nicolson and Heun, plus the stiffly accurate Kennedy-Carpenter
//! pairs ARK4(3)6L[2]SA and ARK5(4)8L[2]SA (Kennedy & Carpenter,
//! *Additive Runge-Kutta schemes for convection-diffusion-reaction
//! equations*, NASA/TM-2001-211038). Embedded error-estimator weights are
//! not stored; nothing here does step-size control.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Joint implicit/explicit Butcher tableau with shared `b` and `c`.
///
/// Storage is 0-based; the layout printed by `Display` follows the usual
/// 1-based tableau notation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    name: &'static str,
    s: usize,
    gamma: f64,
    c: Vec<f64>,
    b: Vec<f64>,
    a_impl: Vec<Vec<f64>>,
    a_expl: Vec<Vec<f64>>,
    declared_order: usize,
}

impl ImexTableau {
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Number of stages.
    pub fn stages(&self) -> usize {
        self.s
    }

    /// The repeated implicit diagonal entry γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a_impl(&self, i: usize, j: usize) -> f64 {
        self.a_impl[i][j]
    }

    pub fn a_expl(&self, i: usize, j: usize) -> f64 {
        self.a_expl[i][j]
    }

    pub fn declared_order(&self) -> usize {
        self.declared_order
    }
}

/// CNH: Crank-Nicolson (implicit side) combined with Heun's method
/// (explicit side). Two stages, second order, A-stable implicit part.
pub fn cnh() -> ImexTableau {
    ImexTableau {
        name: "cnh",
        s: 2,
        gamma: 0.5,
        c: vec![0.0, 1.0],
        b: vec![0.5, 0.5],
        a_impl: vec![vec![0.0, 0.0], vec![0.5, 0.5]],
        a_expl: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        declared_order: 2,
    }
}

/// ARK4(3)6L[2]SA: six stages, fourth order, L-stable stiffly accurate
/// ESDIRK implicit part, γ = 1/4. Coefficients from Kennedy & Carpenter.
pub fn ark436() -> ImexTableau {
    let s = 6;
    let g = 0.25;
    let c = vec![0.0, 1.0 / 2.0, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0];
    let b = vec![
        82889.0 / 524892.0,
        0.0,
        15625.0 / 83664.0,
        69875.0 / 102672.0,
        -2260.0 / 8211.0,
        1.0 / 4.0,
    ];
    let mut a_impl = vec![vec![0.0; s]; s];
    a_impl[1][0] = 1.0 / 4.0;
    a_impl[1][1] = g;
    a_impl[2][0] = 8611.0 / 62500.0;
    a_impl[2][1] = -1743.0 / 31250.0;
    a_impl[2][2] = g;
    a_impl[3][0] = 5012029.0 / 34652500.0;
    a_impl[3][1] = -654441.0 / 2922500.0;
    a_impl[3][2] = 174375.0 / 388108.0;
    a_impl[3][3] = g;
    a_impl[4][0] = 15267082809.0 / 155376265600.0;
    a_impl[4][1] = -71443401.0 / 120774400.0;
    a_impl[4][2] = 730878875.0 / 902184768.0;
    a_impl[4][3] = 2285395.0 / 8070912.0;
    a_impl[4][4] = g;
    a_impl[5][0] = 82889.0 / 524892.0;
    a_impl[5][1] = 0.0;
    a_impl[5][2] = 15625.0 / 83664.0;
    a_impl[5][3] = 69875.0 / 102672.0;
    a_impl[5][4] = -2260.0 / 8211.0;
    a_impl[5][5] = g;

    let mut a_expl = vec![vec![0.0; s]; s];
    a_expl[1][0] = 1.0 / 2.0;
    a_expl[2][0] = 13861.0 / 62500.0;
    a_expl[2][1] = 6889.0 / 62500.0;
    a_expl[3][0] = -116923316275.0 / 2393684061468.0;
    a_expl[3][1] = -2731218467317.0 / 15368042101831.0;
    a_expl[3][2] = 9408046702089.0 / 11113171139209.0;
    a_expl[4][0] = -451086348788.0 / 2902428689909.0;
    a_expl[4][1] = -2682348792572.0 / 7519795681897.0;
    a_expl[4][2] = 12662868775082.0 / 11960479115383.0;
    a_expl[4][3] = 3355817975965.0 / 11060851509271.0;
    a_expl[5][0] = 647845179188.0 / 3216320057751.0;
    a_expl[5][1] = 73281519250.0 / 8382639484533.0;
    a_expl[5][2] = 552539513391.0 / 3454668386233.0;
    a_expl[5][3] = 3354512671639.0 / 8306763924573.0;
    a_expl[5][4] = 4040.0 / 17871.0;

    ImexTableau { name: "ark436", s, gamma: g, c, b, a_impl, a_expl, declared_order: 4 }
}

/// ARK5(4)8L[2]SA: eight stages, fifth order, L-stable stiffly accurate
/// ESDIRK implicit part, γ = 41/200. Coefficients from Kennedy & Carpenter.
pub fn ark548() -> ImexTableau {
    let s = 8;
    let g = 41.0 / 200.0;
    let c = vec![
        0.0,
        41.0 / 100.0,
        2935347310677.0 / 11292855782101.0,
        1426016391358.0 / 7196633302097.0,
        92.0 / 100.0,
        24.0 / 100.0,
        3.0 / 5.0,
        1.0,
    ];
    let b = vec![
        -872700587467.0 / 9133579230613.0,
        0.0,
        0.0,
        22348218063261.0 / 9555858737531.0,
        -1143369518992.0 / 8141816002931.0,
        -39379526789629.0 / 19018526304540.0,
        32727382324388.0 / 42900044865799.0,
        41.0 / 200.0,
    ];
    let mut a_impl = vec![vec![0.0; s]; s];
    a_impl[1][0] = 41.0 / 200.0;
    a_impl[1][1] = g;
    a_impl[2][0] = 41.0 / 400.0;
    a_impl[2][1] = -567603406766.0 / 11931857230679.0;
    a_impl[2][2] = g;
    a_impl[3][0] = 683785636431.0 / 9252920307686.0;
    a_impl[3][1] = 0.0;
    a_impl[3][2] = -110385047103.0 / 1367015193373.0;
    a_impl[3][3] = g;
    a_impl[4][0] = 3016520224154.0 / 10081342136671.0;
    a_impl[4][1] = 0.0;
    a_impl[4][2] = 30586259806659.0 / 12414158314087.0;
    a_impl[4][3] = -22760509404356.0 / 11113319521817.0;
    a_impl[4][4] = g;
    a_impl[5][0] = 218866479029.0 / 1489978393911.0;
    a_impl[5][1] = 0.0;
    a_impl[5][2] = 638256894668.0 / 5436446318841.0;
    a_impl[5][3] = -1179710474555.0 / 5321154724896.0;
    a_impl[5][4] = -60928119172.0 / 8023461067671.0;
    a_impl[5][5] = g;
    a_impl[6][0] = 1020004230633.0 / 5715676835656.0;
    a_impl[6][1] = 0.0;
    a_impl[6][2] = 25762820946817.0 / 25263940353407.0;
    a_impl[6][3] = -2161375909145.0 / 9755907335909.0;
    a_impl[6][4] = -211217309593.0 / 5846859502534.0;
    a_impl[6][5] = -4269925059573.0 / 7827059040749.0;
    a_impl[6][6] = g;
    a_impl[7][0] = -872700587467.0 / 9133579230613.0;
    a_impl[7][1] = 0.0;
    a_impl[7][2] = 0.0;
    a_impl[7][3] = 22348218063261.0 / 9555858737531.0;
    a_impl[7][4] = -1143369518992.0 / 8141816002931.0;
    a_impl[7][5] = -39379526789629.0 / 19018526304540.0;
    a_impl[7][6] = 32727382324388.0 / 42900044865799.0;
    a_impl[7][7] = g;

    let mut a_expl = vec![vec![0.0; s]; s];
    a_expl[1][0] = 41.0 / 100.0;
    a_expl[2][0] = 367902744464.0 / 2072280473677.0;
    a_expl[2][1] = 677623207551.0 / 8224143866563.0;
    a_expl[3][0] = 1268023523408.0 / 10340822734521.0;
    a_expl[3][1] = 0.0;
    a_expl[3][2] = 1029933939417.0 / 13636558850479.0;
    a_expl[4][0] = 14463281900351.0 / 6315353703477.0;
    a_expl[4][1] = 0.0;
    a_expl[4][2] = 66114435211212.0 / 5879490589093.0;
    a_expl[4][3] = -54053170152839.0 / 4284798021562.0;
    a_expl[5][0] = 14090043504691.0 / 34967701212078.0;
    a_expl[5][1] = 0.0;
    a_expl[5][2] = 15191511035443.0 / 11219624916014.0;
    a_expl[5][3] = -18461159152457.0 / 12425892160975.0;
    a_expl[5][4] = -281667163811.0 / 9011619295870.0;
    a_expl[6][0] = 19230459214898.0 / 13134317526959.0;
    a_expl[6][1] = 0.0;
    a_expl[6][2] = 21275331358303.0 / 2942455364971.0;
    a_expl[6][3] = -38145345988419.0 / 4862620318723.0;
    a_expl[6][4] = -1.0 / 8.0;
    a_expl[6][5] = -1.0 / 8.0;
    a_expl[7][0] = -19977161125411.0 / 11928030595625.0;
    a_expl[7][1] = 0.0;
    a_expl[7][2] = -40795976796054.0 / 6384907823539.0;
    a_expl[7][3] = 177454434618887.0 / 12078138498510.0;
    a_expl[7][4] = 782672205425.0 / 8267701900261.0;
    a_expl[7][5] = -69563011059811.0 / 9646580694205.0;
    a_expl[7][6] = 7356628210526.0 / 4942186776405.0;

    ImexTableau { name: "ark548", s, gamma: g, c, b, a_impl, a_expl, declared_order: 5 }
}

/// All shipped tableaus.
pub fn all_tableaus() -> Vec<ImexTableau> {
    vec![cnh(), ark436(), ark548()]
}

/// Look a shipped tableau up by name.
pub fn by_name(name: &str) -> Option<ImexTableau> {
    match name {
        "cnh" => Some(cnh()),
        "ark436" => Some(ark436()),
        "ark548" => Some(ark548()),
        _ => None,
    }
}

/// One failed structural invariant, with indices and magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub row: Option<usize>,
    pub col: Option<usize>,
    pub magnitude: f64,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.invariant)?;
        if let Some(r) = self.row {
            write!(f, " [row {}", r + 1)?;
            if let Some(c) = self.col {
                write!(f, ", col {}", c + 1)?;
            }
            write!(f, "]")?;
        }
        write!(f, " (magnitude {:.3e})", self.magnitude)
    }
}

const VALIDATE_TOL: f64 = 1e-12;

/// Check every structural invariant of the joint tableau to 1e-12:
/// ESDIRK diagonal, strict lower triangularity of the explicit side,
/// row-sum consistency with `c` on both sides, and `Σb = 1`.
pub fn validate(t: &ImexTableau) -> Vec<Violation> {
    let mut out = Vec::new();
    let s = t.stages();
    if t.a_impl(0, 0) != 0.0 {
        out.push(Violation {
            invariant: "first implicit diagonal entry must be 0",
            row: Some(0),
            col: Some(0),
            magnitude: t.a_impl(0, 0).abs(),
        });
    }
    for i in 1..s {
        let d = (t.a_impl(i, i) - t.gamma()).abs();
        if d > VALIDATE_TOL {
            out.push(Violation {
                invariant: "ESDIRK diagonal != gamma",
                row: Some(i),
                col: Some(i),
                magnitude: d,
            });
        }
    }
    for i in 0..s {
        for j in i..s {
            if j > i && t.a_impl(i, j) != 0.0 {
                out.push(Violation {
                    invariant: "implicit tableau not lower triangular",
                    row: Some(i),
                    col: Some(j),
                    magnitude: t.a_impl(i, j).abs(),
                });
            }
            if t.a_expl(i, j) != 0.0 {
                out.push(Violation {
                    invariant: "explicit tableau not strictly lower triangular",
                    row: Some(i),
                    col: Some(j),
                    magnitude: t.a_expl(i, j).abs(),
                });
            }
        }
    }
    for i in 0..s {
        let sum_i: f64 = (0..s).map(|j| t.a_impl(i, j)).sum();
        let d = (sum_i - t.c()[i]).abs();
        if d > VALIDATE_TOL {
            out.push(Violation {
                invariant: "implicit row sum != c",
                row: Some(i),
                col: None,
                magnitude: d,
            });
        }
        let sum_e: f64 = (0..s).map(|j| t.a_expl(i, j)).sum();
        let d = (sum_e - t.c()[i]).abs();
        if d > VALIDATE_TOL {
            out.push(Violation {
                invariant: "explicit row sum != c",
                row: Some(i),
                col: None,
                magnitude: d,
            });
        }
    }
    let sb: f64 = t.b().iter().sum();
    if (sb - 1.0).abs() > VALIDATE_TOL {
        out.push(Violation {
            invariant: "sum of b != 1",
            row: None,
            col: None,
            magnitude: (sb - 1.0).abs(),
        });
    }
    out
}

/// Which sub-tableau an order-condition residual was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Implicit,
    Explicit,
}

/// One classical order-condition residual.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderResidual {
    pub order: usize,
    pub side: Side,
    pub condition: &'static str,
    pub value: f64,
}

/// Classical single-tableau order-condition residuals up to order
/// `p ∈ {1, 2, 3}`, evaluated separately on `(a_impl, b, c)` and
/// `(a_expl, b, c)`:
///
/// * order 1: `Σbⱼ − 1`
/// * order 2: `Σbⱼcⱼ − 1/2`
/// * order 3: `Σbⱼcⱼ² − 1/3` and `Σⱼₖ bⱼ aⱼₖ cₖ − 1/6`
pub fn order_conditions_residual(t: &ImexTableau, p: usize) -> Vec<OrderResidual> {
    assert!((1..=3).contains(&p), "order conditions implemented up to 3");
    let s = t.stages();
    let b = t.b();
    let c = t.c();
    let mut out = Vec::new();
    for side in [Side::Implicit, Side::Explicit] {
        let a = |i: usize, j: usize| match side {
            Side::Implicit => t.a_impl(i, j),
            Side::Explicit => t.a_expl(i, j),
        };
        out.push(OrderResidual {
            order: 1,
            side,
            condition: "sum(b) = 1",
            value: b.iter().sum::<f64>() - 1.0,
        });
        if p >= 2 {
            let v: f64 = (0..s).map(|j| b[j] * c[j]).sum();
            out.push(OrderResidual { order: 2, side, condition: "sum(b.c) = 1/2", value: v - 0.5 });
        }
        if p >= 3 {
            let v: f64 = (0..s).map(|j| b[j] * c[j] * c[j]).sum();
            out.push(OrderResidual {
                order: 3,
                side,
                condition: "sum(b.c^2) = 1/3",
                value: v - 1.0 / 3.0,
            });
            let mut v = 0.0;
            for j in 0..s {
                for k in 0..s {
                    v += b[j] * a(j, k) * c[k];
                }
            }
            out.push(OrderResidual {
                order: 3,
                side,
                condition: "sum(b.A.c) = 1/6",
                value: v - 1.0 / 6.0,
            });
        }
    }
    out
}

impl core::fmt::Display for ImexTableau {
    /// Aligned joint layout: implicit block on the left, explicit block on
    /// the right, shared `b` row under the rule.
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = self.s;
        let num = |x: f64| -> String { format!("{x:>10.6}") };
        let blank = " ".repeat(10);
        for i in 0..s {
            let mut line = format!("{} |", num(self.c[i]));
            for j in 0..s {
                if j <= i && !(i == 0 && j == 0) {
                    line.push_str(&num(self.a_impl[i][j]));
                } else {
                    line.push_str(&blank);
                }
            }
            line.push_str(&format!(" || {} |", num(self.c[i])));
            for j in 0..s.saturating_sub(1) {
                if j < i {
                    line.push_str(&num(self.a_expl[i][j]));
                } else {
                    line.push_str(&blank);
                }
            }
            writeln!(f, "{}", line.trim_end())?;
        }
        let dash_left = 11 + 10 * s;
        let dash_right = 14 + 10 * (s - 1);
        writeln!(f, "{}++{}", "-".repeat(dash_left), "-".repeat(dash_right))?;
        let mut line = format!("{blank} |");
        for j in 0..s {
            line.push_str(&num(self.b[j]));
        }
        line.push_str(&format!(" || {blank} |"));
        for j in 0..s {
            line.push_str(&num(self.b[j]));
        }
        writeln!(f, "{line}")
    }
}
