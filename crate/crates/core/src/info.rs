//! Exact information measures on finite distributions and scalar Gaussian
//! channels. All logarithms are base 2.
//!
//! Joint distributions are dense row-major tables with named axes. Every
//! measure is computed from marginal entropies, so `I(A;B|C)` is
//! `H(A,C) + H(B,C) - H(A,B,C) - H(C)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Negative mutual information values within this band are float noise.
pub const MI_CLAMP_TOL: f64 = 1e-10;

/// Largest dense joint table that will be materialised.
pub const MAX_JOINT_CELLS: usize = 100_000_000;

fn check_masses(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has invalid mass {p}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}"
        )));
    }
    Ok(())
}

/// A probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_masses(&probs, "distribution")?;
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::InvalidArgument(format!(
                "point mass at {at} outside alphabet of size {n}"
            )));
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for FiniteDist {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FiniteDist> for Vec<f64> {
    fn from(d: FiniteDist) -> Self {
        d.probs
    }
}

/// A channel `P(out | in)`: row `i` is the output distribution for input `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CondDist {
    n_out: usize,
    // row-major, n_in * n_out
    data: Vec<f64>,
}

impl CondDist {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_out = rows.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidDistribution("channel has no input symbols".into())
        })?;
        let mut data = Vec::with_capacity(rows.len() * n_out);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_out {
                return Err(Error::DimensionMismatch(format!(
                    "channel row {i} has {} outputs, expected {n_out}",
                    row.len()
                )));
            }
            check_masses(row, &format!("channel row {i}"))?;
            data.extend_from_slice(row);
        }
        Ok(Self { n_out, data })
    }

    /// Builds a channel from a flat row-major buffer, validating every row.
    pub fn from_flat(n_in: usize, n_out: usize, data: Vec<f64>) -> Result<Self> {
        if n_in == 0 || n_out == 0 || data.len() != n_in * n_out {
            return Err(Error::DimensionMismatch(format!(
                "flat channel buffer of {} entries for {n_in}x{n_out}",
                data.len()
            )));
        }
        for (i, row) in data.chunks(n_out).enumerate() {
            check_masses(row, &format!("channel row {i}"))?;
        }
        Ok(Self { n_out, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n_out: n, data }
    }

    /// Every input maps to output symbol `at`.
    pub fn constant(n_in: usize, n_out: usize, at: usize) -> Self {
        assert!(at < n_out, "constant output outside alphabet");
        let mut data = vec![0.0; n_in * n_out];
        for i in 0..n_in {
            data[i * n_out + at] = 1.0;
        }
        Self { n_out, data }
    }

    /// Every row equals `d`: output independent of input.
    pub fn independent(n_in: usize, d: &FiniteDist) -> Self {
        let mut data = Vec::with_capacity(n_in * d.len());
        for _ in 0..n_in {
            data.extend_from_slice(d.probs());
        }
        Self {
            n_out: d.len(),
            data,
        }
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "crossover probability {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            n_out: 2,
            data: vec![1.0 - p, p, p, 1.0 - p],
        })
    }

    pub fn n_in(&self) -> usize {
        self.data.len() / self.n_out
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_out..(i + 1) * self.n_out]
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.data[input * self.n_out + output]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_out)
    }

    /// Cascade `self` then `next`: `P(w|x) = Σ_y P(y|x) P(w|y)`.
    pub fn then(&self, next: &CondDist) -> Result<CondDist> {
        if self.n_out != next.n_in() {
            return Err(Error::DimensionMismatch(format!(
                "cascading a channel with {} outputs into one with {} inputs",
                self.n_out,
                next.n_in()
            )));
        }
        let n_in = self.n_in();
        let m = next.n_out;
        let mut data = vec![0.0; n_in * m];
        for i in 0..n_in {
            for (j, &p) in self.row(i).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (w, &q) in next.row(j).iter().enumerate() {
                    data[i * m + w] += p * q;
                }
            }
        }
        Ok(CondDist { n_out: m, data })
    }

    /// Output distribution for input distribution `d`.
    pub fn push_forward(&self, d: &FiniteDist) -> Result<FiniteDist> {
        if d.len() != self.n_in() {
            return Err(Error::DimensionMismatch(format!(
                "input distribution over {} symbols into a channel with {} inputs",
                d.len(),
                self.n_in()
            )));
        }
        let mut out = vec![0.0; self.n_out];
        for (i, &p) in d.probs().iter().enumerate() {
            for (o, &q) in self.row(i).iter().enumerate() {
                out[o] += p * q;
            }
        }
        Ok(FiniteDist { probs: out })
    }

    /// Pairs two channels sharing an input into one with output `(a, b)`
    /// flattened as `a * |B| + b`, outputs conditionally independent.
    pub fn product(&self, other: &CondDist) -> Result<CondDist> {
        if self.n_in() != other.n_in() {
            return Err(Error::DimensionMismatch(format!(
                "product of channels with {} and {} inputs",
                self.n_in(),
                other.n_in()
            )));
        }
        let (a, b) = (self.n_out, other.n_out);
        let mut data = Vec::with_capacity(self.n_in() * a * b);
        for i in 0..self.n_in() {
            for &p in self.row(i) {
                for &q in other.row(i) {
                    data.push(p * q);
                }
            }
        }
        Ok(CondDist { n_out: a * b, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CondDist {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<CondDist> for Vec<Vec<f64>> {
    fn from(c: CondDist) -> Self {
        c.to_rows()
    }
}

/// Dense joint distribution over named axes, row-major in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    axes: Vec<String>,
    shape: Vec<usize>,
    table: Vec<f64>,
}

fn checked_cells(shape: &[usize]) -> Result<usize> {
    let mut cells: usize = 1;
    for &d in shape {
        cells = cells.checked_mul(d).filter(|c| *c <= MAX_JOINT_CELLS).ok_or(
            Error::CapExceeded {
                what: "dense joint distribution",
                required: shape.iter().map(|&d| d as u128).product(),
                allowed: MAX_JOINT_CELLS as u128,
            },
        )?;
    }
    Ok(cells)
}

impl JointDist {
    pub fn new(axes: Vec<String>, shape: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if axes.len() != shape.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} axis labels for {} dimensions",
                axes.len(),
                shape.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate axis `{a}`")));
            }
        }
        let cells = checked_cells(&shape)?;
        if cells != table.len() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} cells, shape implies {cells}",
                table.len()
            )));
        }
        check_masses(&table, "joint table")?;
        Ok(Self { axes, shape, table })
    }

    pub(crate) fn from_parts(axes: Vec<String>, shape: Vec<usize>, table: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), table.len());
        Self { axes, shape, table }
    }

    /// Product distribution of independent one-dimensional factors.
    pub fn independent(factors: &[(&str, &FiniteDist)]) -> Result<Self> {
        let mut axes = Vec::new();
        let mut shape = Vec::new();
        let mut table = vec![1.0];
        for (name, d) in factors {
            axes.push((*name).to_string());
            shape.push(d.len());
            checked_cells(&shape)?;
            table = table
                .iter()
                .flat_map(|&a| d.probs().iter().map(move |&b| a * b))
                .collect();
        }
        Self::new(axes, shape, table)
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis_len(&self, name: &str) -> Result<usize> {
        Ok(self.shape[self.axis_index(name)?])
    }

    /// Marginal on `keep`, with axes in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDist> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|k| self.axis_index(k))
            .collect::<Result<_>>()?;
        for (i, a) in idx.iter().enumerate() {
            if idx[..i].contains(a) {
                return Err(Error::OverlappingAxes(keep[i].to_string()));
            }
        }
        let out_shape: Vec<usize> = idx.iter().map(|&i| self.shape[i]).collect();
        let table = self.marginal_table(&idx);
        Ok(JointDist::from_parts(
            keep.iter().map(|s| s.to_string()).collect(),
            out_shape,
            table,
        ))
    }

    fn marginal_table(&self, idx: &[usize]) -> Vec<f64> {
        let rank = self.shape.len();
        // stride of each source axis inside the output table
        let mut out_stride = vec![0usize; rank];
        let mut s = 1;
        for &i in idx.iter().rev() {
            out_stride[i] = s;
            s *= self.shape[i];
        }
        let mut out = vec![0.0; s];
        let mut counter = vec![0usize; rank];
        let mut pos = 0usize;
        for &p in &self.table {
            out[pos] += p;
            // odometer increment, tracking the output offset incrementally
            for ax in (0..rank).rev() {
                counter[ax] += 1;
                pos += out_stride[ax];
                if counter[ax] < self.shape[ax] {
                    break;
                }
                pos -= out_stride[ax] * self.shape[ax];
                counter[ax] = 0;
            }
        }
        out
    }

    /// Joint entropy of the named axes; the empty set has entropy 0.
    pub fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        if names.is_empty() {
            return Ok(0.0);
        }
        let m = self.marginal(names)?;
        Ok(entropy_of_masses(&m.table))
    }

    /// `H(A | B)`.
    pub fn conditional_entropy(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        let ab = union_disjoint(&[a, b])?;
        Ok(self.entropy_of(&ab)? - self.entropy_of(b)?)
    }
}

fn union_disjoint<'a>(sets: &[&[&'a str]]) -> Result<Vec<&'a str>> {
    let mut out: Vec<&str> = Vec::new();
    for set in sets {
        for name in *set {
            if out.contains(name) {
                return Err(Error::OverlappingAxes(name.to_string()));
            }
            out.push(name);
        }
    }
    Ok(out)
}

pub(crate) fn entropy_of_masses(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

fn clamp_mi(v: f64) -> f64 {
    debug_assert!(v >= -1e-8, "information measure {v} far below zero");
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Shannon entropy in bits.
pub fn entropy(d: &FiniteDist) -> f64 {
    entropy_of_masses(d.probs())
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "binary entropy argument {p} outside [0, 1]"
        )));
    }
    Ok(entropy_of_masses(&[p, 1.0 - p]))
}

/// `I(A;B)` between two disjoint axis sets of `j`.
pub fn mutual_information(j: &JointDist, a: &[&str], b: &[&str]) -> Result<f64> {
    conditional_mutual_information(j, a, b, &[])
}

/// `I(A;B|C)` for pairwise disjoint axis sets of `j`.
pub fn conditional_mutual_information(
    j: &JointDist,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    let abc = union_disjoint(&[a, b, c])?;
    let ac = union_disjoint(&[a, c])?;
    let bc = union_disjoint(&[b, c])?;
    let v = j.entropy_of(&ac)? + j.entropy_of(&bc)? - j.entropy_of(&abc)? - j.entropy_of(c)?;
    Ok(clamp_mi(v))
}

/// Axis labels of the composed chain joint.
pub mod axis {
    pub const V: &str = "V";
    pub const U: &str = "U";
    pub const XT: &str = "Xt";
    pub const X: &str = "X";
    pub const Y: &str = "Y";
    pub const Z: &str = "Z";
}

/// Joint distribution of the chain `V - U - X̃ - X - (Y, Z)` with axes
/// `[V, U, Xt, X, Y, Z]`.
///
/// `yz_given_x` is the joint observation channel with outputs flattened as
/// `y * |Z| + z`, where `|Y| = y_card`.
pub fn compose_chain(
    p_x: &FiniteDist,
    xt_given_x: &CondDist,
    u_given_xt: &CondDist,
    v_given_u: &CondDist,
    yz_given_x: &CondDist,
    y_card: usize,
) -> Result<JointDist> {
    let nx = p_x.len();
    let mismatch = |what: &str, got: usize, want: usize| {
        Err(Error::DimensionMismatch(format!(
            "{what} has {got}, expected {want}"
        )))
    };
    if xt_given_x.n_in() != nx {
        return mismatch("enrollment channel inputs", xt_given_x.n_in(), nx);
    }
    let nxt = xt_given_x.n_out();
    if u_given_xt.n_in() != nxt {
        return mismatch("P(U|X̃) inputs", u_given_xt.n_in(), nxt);
    }
    let nu = u_given_xt.n_out();
    if v_given_u.n_in() != nu {
        return mismatch("P(V|U) inputs", v_given_u.n_in(), nu);
    }
    let nv = v_given_u.n_out();
    if yz_given_x.n_in() != nx {
        return mismatch("observation channel inputs", yz_given_x.n_in(), nx);
    }
    if y_card == 0 || yz_given_x.n_out() % y_card != 0 {
        return Err(Error::DimensionMismatch(format!(
            "observation alphabet of {} symbols does not factor with |Y| = {y_card}",
            yz_given_x.n_out()
        )));
    }
    let nyz = yz_given_x.n_out();
    let nz = nyz / y_card;
    let shape = vec![nv, nu, nxt, nx, y_card, nz];
    let cells = checked_cells(&shape)?;

    let mut table = vec![0.0; cells];
    let block_x = nyz;
    let block_xt = nx * block_x;
    let block_u = nxt * block_xt;
    let block_v = nu * block_u;
    for v in 0..nv {
        for u in 0..nu {
            let pvu = v_given_u.get(u, v);
            if pvu == 0.0 {
                continue;
            }
            for xt in 0..nxt {
                let puxt = u_given_xt.get(xt, u) * pvu;
                if puxt == 0.0 {
                    continue;
                }
                for x in 0..nx {
                    let w = p_x.probs()[x] * xt_given_x.get(x, xt) * puxt;
                    if w == 0.0 {
                        continue;
                    }
                    let base = v * block_v + u * block_u + xt * block_xt + x * block_x;
                    for (o, &q) in yz_given_x.row(x).iter().enumerate() {
                        table[base + o] = w * q;
                    }
                }
            }
        }
    }
    Ok(JointDist::from_parts(
        [axis::V, axis::U, axis::XT, axis::X, axis::Y, axis::Z]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        shape,
        table,
    ))
}

/// `½ log2(σ² ν + 1)`: mutual information of the scalar channel with power
/// gain `nu` and unit-gain-normalised noise.
pub fn gaussian_scalar_mi(sigma_x2: f64, nu: f64) -> Result<f64> {
    if !(sigma_x2 >= 0.0) || !(nu >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gaussian_scalar_mi needs non-negative inputs, got σ² = {sigma_x2}, ν = {nu}"
        )));
    }
    Ok(0.5 * (sigma_x2 * nu).ln_1p() / std::f64::consts::LN_2)
}
