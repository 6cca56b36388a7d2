//! Forcing operators `F₁`, `F₂` and the Duhamel integrals `D_ε`, `D̃_ε`.
//!
//! The solver path never forms `F₁ + F₂` pointwise. With `w(s) = S₂(0) w_b(s)` the
//! harmonic field built from the boundary history,
//! `F₁[φ_b](s) + F₂[v](s) = ∂_{y_N} w(s) + S₂(0) g(s)` with `g = ∂_{x_N} v(·, 0, ·)`,
//! because `P` depends on `x_N + t` only. `∂_{y_N} w` enters as depth slopes, which
//! [`S1Op`] integrates exactly cell by cell.

use std::sync::Arc;

use crate::error::{domain, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};
use crate::quadrature::{duhamel_integrate, LateralStencil, TimeQuadRule};
use crate::semigroups::{CellField, S1BoundaryDxn, S1Op, S1Output, S2Op};

/// `h(x_N, t)` from the `F₂` bound: `x_N^{-3/4} t^{1/4}` on `(0, 1]`, `x_N^{-1/2}` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HFactor {
    pub x_n: f64,
    pub t: f64,
}

impl HFactor {
    pub fn value(&self) -> f64 {
        h_factor(self.x_n, self.t)
    }
}

pub fn h_factor(x_n: f64, t: f64) -> f64 {
    if x_n > 1.0 {
        x_n.powf(-0.5)
    } else {
        x_n.powf(-0.75) * t.powf(0.25)
    }
}

/// Endpoint exponents used for every Duhamel integral here: `s^{-1/2}` from the trace
/// envelope, `(t-s)^{-1/2}` from `∂_{x_N} S₁` near the diagonal.
pub fn duhamel_rule(n_nodes: usize) -> Result<TimeQuadRule> {
    TimeQuadRule::new(n_nodes, 0.5, 0.5)
}

/// Boundary time series on `(0, T]` sampled at `s_j = T 2^{-(n-1-j)/p}`.
///
/// Interpolation is a Catmull–Rom spline in `log s` of `(f(s) - base) s^{-power}`, so
/// `power = -1/2` reproduces the `s^{-1/2}` envelope of a normal-derivative trace and
/// `power = 1/2` the `s^{1/2}` onset of its time integral. Below `s_0` the scaled value
/// is held constant. The result is linear in the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceHistory {
    pub grid: Arc<HalfSpaceGrid>,
    pub t_end: f64,
    pub per_octave: usize,
    pub power: f64,
    pub base: Option<BoundaryField>,
    times: Vec<f64>,
    values: Vec<BoundaryField>,
}

impl TraceHistory {
    pub fn geometric_times(t_end: f64, per_octave: usize, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| t_end * 2f64.powf(-((n - 1 - j) as f64) / per_octave as f64))
            .collect()
    }

    pub fn new(
        grid: &Arc<HalfSpaceGrid>,
        t_end: f64,
        per_octave: usize,
        power: f64,
        base: Option<BoundaryField>,
        values: Vec<BoundaryField>,
    ) -> Result<Self> {
        if !(t_end > 0.0) || per_octave == 0 || values.len() < 2 {
            return domain("trace history needs t_end > 0, per_octave >= 1 and >= 2 samples");
        }
        if values.iter().chain(base.iter()).any(|v| *v.grid != **grid) {
            return domain("trace samples live on a different grid");
        }
        Ok(TraceHistory {
            grid: grid.clone(),
            t_end,
            per_octave,
            power,
            base,
            times: Self::geometric_times(t_end, per_octave, values.len()),
            values,
        })
    }

    pub fn zeros(grid: &Arc<HalfSpaceGrid>, t_end: f64, per_octave: usize, n: usize, power: f64) -> Result<Self> {
        Self::new(grid, t_end, per_octave, power, None, vec![BoundaryField::zeros(grid); n])
    }

    pub fn from_fn(
        grid: &Arc<HalfSpaceGrid>,
        t_end: f64,
        per_octave: usize,
        n: usize,
        power: f64,
        mut f: impl FnMut(f64) -> Result<BoundaryField>,
    ) -> Result<Self> {
        let values = Self::geometric_times(t_end, per_octave, n)
            .into_iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, t_end, per_octave, power, None, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[BoundaryField] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same layout, new samples.
    pub fn with_values(&self, values: Vec<BoundaryField>) -> Result<Self> {
        if values.len() != self.values.len() {
            return domain("sample count changed");
        }
        Self::new(&self.grid, self.t_end, self.per_octave, self.power, self.base.clone(), values)
    }

    /// `f(s) = b · base + Σ a_j f(s_j)`; returns `(a, b)`.
    pub fn coefficients(&self, s: f64) -> (Vec<(usize, f64)>, f64) {
        let n = self.values.len();
        let x = (s / self.t_end).log2() * self.per_octave as f64 + (n - 1) as f64;
        let mut c = [0.0; 4];
        let j0: isize;
        if !(x > 0.0) {
            j0 = -1;
            c[1] = 1.0;
        } else if x >= (n - 1) as f64 {
            j0 = n as isize - 3;
            c[2] = 1.0;
        } else {
            let j = x.floor();
            let mu = x - j;
            j0 = j as isize - 1;
            let (m2, m3) = (mu * mu, mu * mu * mu);
            c = [
                0.5 * (-m3 + 2.0 * m2 - mu),
                0.5 * (3.0 * m3 - 5.0 * m2 + 2.0),
                0.5 * (-3.0 * m3 + 4.0 * m2 + mu),
                0.5 * (m3 - m2),
            ];
        }
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
        let mut push = |j: isize, w: f64| {
            if w == 0.0 {
                return;
            }
            // ghosts: constant below the first sample, linear beyond the last
            if j < 0 {
                add(&mut out, 0, w);
            } else if j >= n as isize {
                add(&mut out, n - 1, 2.0 * w);
                add(&mut out, n - 2, -w);
            } else {
                add(&mut out, j as usize, w);
            }
        };
        for (k, &w) in c.iter().enumerate() {
            push(j0 + k as isize, w);
        }
        let mut b = 1.0;
        for (j, w) in out.iter_mut() {
            *w *= (s / self.times[*j]).powf(self.power);
            b -= *w;
        }
        if self.base.is_none() {
            b = 0.0;
        }
        (out, b)
    }

    pub fn eval(&self, s: f64) -> BoundaryField {
        let (a, b) = self.coefficients(s);
        let mut out = match &self.base {
            Some(base) if b != 0.0 => {
                let mut f = base.clone();
                f.values.iter_mut().for_each(|v| *v *= b);
                f
            }
            _ => BoundaryField::zeros(&self.grid),
        };
        for (j, w) in a {
            out.axpy(w, &self.values[j]);
        }
        out
    }

    /// Sample-wise difference (the base cancels).
    pub fn diff(&self, other: &TraceHistory) -> Result<TraceHistory> {
        if self.times != other.times || self.power != other.power {
            return domain("trace histories have different layouts");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut d = a.clone();
                d.axpy(-1.0, b);
                d
            })
            .collect();
        Self::new(&self.grid, self.t_end, self.per_octave, self.power, None, values)
    }
}

fn add(out: &mut Vec<(usize, f64)>, j: usize, w: f64) {
    match out.iter_mut().find(|(k, _)| *k == j) {
        Some((_, v)) => *v += w,
        None => out.push((j, w)),
    }
}

/// `F₁[φ_b](·, t)`: row `m` is the `∂_t P(·, y_m, t)` lattice convolution.
pub fn f1_eval(phi_b: &BoundaryField, t: f64) -> Result<Field> {
    if !(t > 0.0) {
        return domain(format!("F1 needs t > 0, got {t}"));
    }
    dt_rows(phi_b, t)
}

fn dt_rows(psi: &BoundaryField, t: f64) -> Result<Field> {
    let g = &psi.grid;
    let h = g.lateral_spacing();
    let n = g.n_prime;
    let mut out = Field::zeros(g);
    for (m, &y) in g.depth().iter().enumerate() {
        let st = LateralStencil::poisson_dt(y + t, h, n)?;
        st.apply_add(1.0, &psi.values, &mut out.values[m * n..(m + 1) * n]);
    }
    Ok(out)
}

/// `F₂[v](·, t) = S₂(0) g(t) + ∫_0^t ∂_t S₂(t - s) g(s) ds` for the trace history `g`.
pub fn f2_eval(trace: &TraceHistory, t: f64, rule: &TimeQuadRule) -> Result<Field> {
    let (first, second) = f2_parts(trace, t, rule)?;
    Ok(first.add(&second))
}

/// `(F₂′, F₂″)` separately.
pub fn f2_parts(trace: &TraceHistory, t: f64, rule: &TimeQuadRule) -> Result<(Field, Field)> {
    if !(t > 0.0) {
        return domain(format!("F2 needs t > 0, got {t}"));
    }
    let s2 = S2Op::new(&trace.grid, 0.0)?;
    let first = s2.apply(&trace.eval(t).values);
    let second = duhamel_integrate(|s, rem| dt_rows(&trace.eval(s), rem), t, rule)?;
    Ok((first, second))
}

/// Interior Duhamel data tabulated at the history nodes: `S₂(0) g_j` and the depth
/// slopes of `S₂(0) w_b(s_j)`. The integrand at any `s` is then a short combination.
#[derive(Debug, Clone)]
pub struct ForcingTable {
    g: Option<(TraceHistory, Vec<Field>)>,
    wb: TraceHistory,
    w_slopes: Vec<CellField>,
    base_slope: Option<CellField>,
}

impl ForcingTable {
    pub fn new(g: Option<&TraceHistory>, wb: &TraceHistory) -> Result<Self> {
        let s2 = S2Op::new(&wb.grid, 0.0)?;
        let slopes = |psi: &BoundaryField| CellField::depth_slopes(&s2.apply(&psi.values));
        Ok(ForcingTable {
            g: g.map(|g| (g.clone(), g.values().iter().map(|v| s2.apply(&v.values)).collect())),
            w_slopes: wb.values().iter().map(slopes).collect(),
            base_slope: wb.base.as_ref().map(slopes),
            wb: wb.clone(),
        })
    }

    /// `(S₂(0) g(s), ∂_{y_N} w(s))`.
    pub fn data_at(&self, s: f64) -> (Option<Field>, CellField) {
        let grid = &self.wb.grid;
        let nodal = self.g.as_ref().map(|(h, fields)| {
            let mut f = Field::zeros(grid);
            for (j, a) in h.coefficients(s).0 {
                f.axpy(a, &fields[j]);
            }
            f
        });
        let mut cell = CellField::zeros(grid);
        let (a, b) = self.wb.coefficients(s);
        if let Some(base) = &self.base_slope {
            cell.axpy(b, base);
        }
        for (j, w) in a {
            cell.axpy(w, &self.w_slopes[j]);
        }
        (nodal, cell)
    }
}

/// `w_b(s_j) = [S₂(s_j) φ_b](·, 0) + ∫_0^{s_j} [S₂(s_j - r) g(r)](·, 0) dr` on the nodes
/// of `g` (or of a fresh layout when `g` is absent). Either part may be omitted.
pub fn boundary_history(
    grid: &Arc<HalfSpaceGrid>,
    phi_b: Option<&BoundaryField>,
    g: Option<&TraceHistory>,
    layout: (f64, usize, usize),
    rule: &TimeQuadRule,
) -> Result<TraceHistory> {
    let (t_end, per_octave, n) = layout;
    let h = grid.lateral_spacing();
    let np = grid.n_prime;
    let mut hist = TraceHistory::from_fn(grid, t_end, per_octave, n, 0.5, |s| {
        let mut out = vec![0.0; np];
        if let Some(pb) = phi_b {
            LateralStencil::poisson(s, h, np)?.apply_add(1.0, &pb.values, &mut out);
        }
        if let Some(g) = g {
            let acc = duhamel_integrate(
                |r, rem| Ok(LateralStencil::poisson(rem, h, np)?.apply(&g.eval(r).values)),
                s,
                rule,
            )?;
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += a;
            }
        }
        BoundaryField::new(grid.clone(), out)
    })?;
    hist.base = phi_b.cloned();
    Ok(hist)
}

/// `∫_0^t ∂_{x_N} S₁(ε⁻¹(t-s)) data(s) ds` on the boundary row.
pub fn duhamel_trace_dxn(table: &ForcingTable, eps: f64, t: f64, rule: &TimeQuadRule) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let grid = table.wb.grid.clone();
    duhamel_integrate(
        |s, rem| {
            let op = S1BoundaryDxn::new(&grid, rem / eps)?;
            let (nodal, cell) = table.data_at(s);
            Ok(op.apply(nodal.as_ref(), Some(&cell)))
        },
        t,
        rule,
    )
}

/// `(∫ S₁ data, ∫ ∂_{x_N} S₁ data)` at time `t` for several tables sharing operators.
pub fn duhamel_fields(tables: &[&ForcingTable], eps: f64, t: f64, rule: &TimeQuadRule) -> Result<Vec<(Field, Field)>> {
    check_eps(eps)?;
    let Some(first) = tables.first() else {
        return Ok(Vec::new());
    };
    let grid = first.wb.grid.clone();
    let flat: Vec<Field> = duhamel_integrate(
        |s, rem| {
            let op = S1Op::new(&grid, rem / eps)?;
            let mut out = Vec::with_capacity(2 * tables.len());
            for tb in tables {
                let (nodal, cell) = tb.data_at(s);
                let (v, d) = op.apply_mixed(nodal.as_ref(), Some(&cell), S1Output::Both);
                out.push(v.expect("value requested"));
                out.push(d.expect("derivative requested"));
            }
            Ok(out)
        },
        t,
        rule,
    )?;
    let mut it = flat.into_iter();
    let mut pairs = Vec::with_capacity(tables.len());
    while let (Some(v), Some(d)) = (it.next(), it.next()) {
        pairs.push((v, d));
    }
    Ok(pairs)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

/// `D_ε[φ_b](t) = ∫_0^t S₁(ε⁻¹(t-s)) F₁[φ_b](s) ds` with `F₁` evaluated pointwise in `s`;
/// returns the field and its normal derivative.
pub fn d_eps_eval(phi_b: &BoundaryField, eps: f64, t: f64, rule: &TimeQuadRule) -> Result<(Field, Field)> {
    check_eps(eps)?;
    if !(t > 0.0) {
        return domain(format!("D_eps needs t > 0, got {t}"));
    }
    let grid = phi_b.grid.clone();
    let v: Vec<Field> = duhamel_integrate(
        |s, rem| {
            let f1 = f1_eval(phi_b, s)?;
            let op = S1Op::new(&grid, rem / eps)?;
            let (v, d) = op.apply_mixed(Some(&f1), None, S1Output::Both);
            Ok(vec![v.unwrap(), d.unwrap()])
        },
        t,
        rule,
    )?;
    let mut it = v.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

/// `D̃_ε[v](t) = ∫_0^t S₁(ε⁻¹(t-s)) F₂[v](s) ds` for the trace history `g` of `v`, in the
/// `∂_{y_N} w + S₂(0) g` form; returns the field and its normal derivative.
pub fn d_eps_tilde_eval(trace: &TraceHistory, eps: f64, t: f64, rule: &TimeQuadRule) -> Result<(Field, Field)> {
    check_eps(eps)?;
    if !(t > 0.0) || t > trace.t_end * (1.0 + 1e-12) {
        return domain(format!("D_eps_tilde needs 0 < t <= {}, got {t}", trace.t_end));
    }
    let wb = boundary_history(
        &trace.grid,
        None,
        Some(trace),
        (trace.t_end, trace.per_octave, trace.len()),
        rule,
    )?;
    let table = ForcingTable::new(Some(trace), &wb)?;
    Ok(duhamel_fields(&[&table], eps, t, rule)?.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Dim;

    fn grid() -> Arc<HalfSpaceGrid> {
        Arc::new(HalfSpaceGrid::uniform(Dim::new(2).unwrap(), 4.0, 4.0, 17, 17).unwrap())
    }

    #[test]
    fn h_factor_branches() {
        assert!((h_factor(1.0, 16.0) - 2.0).abs() < 1e-15);
        assert!((h_factor(4.0, 16.0) - 0.5).abs() < 1e-15);
        assert_eq!(HFactor { x_n: 4.0, t: 1.0 }.value(), 0.5);
    }

    #[test]
    fn history_reproduces_envelope_and_nodes() {
        let g = grid();
        let psi = BoundaryField::from_fn(&g, |x| (-x * x).exp()).unwrap();
        let h = TraceHistory::from_fn(&g, 2.0, 2, 21, -0.5, |s| {
            let mut f = psi.clone();
            f.values.iter_mut().for_each(|v| *v *= s.powf(-0.5));
            Ok(f)
        })
        .unwrap();
        for s in [1e-9, 1e-4, 0.0123, 0.5, 1.7, 2.0] {
            let e = h.eval(s);
            for (a, b) in e.values.iter().zip(&psi.values) {
                assert!((a - b * s.powf(-0.5)).abs() < 1e-12 * s.powf(-0.5), "s={s}");
            }
        }
        let t = h.times()[7];
        let (a, _) = h.coefficients(t);
        let w: f64 = a.iter().filter(|(j, _)| *j == 7).map(|(_, w)| *w).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f1_of_constant_vanishes() {
        let g = grid();
        let f = f1_eval(&BoundaryField::constant(&g, 1.0), 0.3).unwrap();
        assert!(f.sup() < 1e-12);
        assert!(f1_eval(&BoundaryField::zeros(&g), 0.3).unwrap().sup() == 0.0);
        assert!(f1_eval(&BoundaryField::zeros(&g), 0.0).is_err());
    }
}
