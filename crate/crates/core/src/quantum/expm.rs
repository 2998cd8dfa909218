//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005 degree selection).

use nalgebra::allocator::Allocator;
use nalgebra::{DefaultAllocator, Dim, DimMin, OMatrix};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(m)` for a square complex matrix with finite entries.
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expm of non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(expm_fixed(m))
}

fn one_norm<D: Dim>(a: &OMatrix<C64, D, D>) -> f64
where
    DefaultAllocator: Allocator<D, D>,
{
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[inline]
fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Works for any nalgebra dimension; callers guarantee finite input.
pub(crate) fn expm_fixed<D>(a: &OMatrix<C64, D, D>) -> OMatrix<C64, D, D>
where
    D: Dim + DimMin<D, Output = D>,
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    let (r, cdim) = a.shape_generic();
    let ident = OMatrix::<C64, D, D>::identity_generic(r, cdim);
    let norm = one_norm(a);
    if norm == 0.0 {
        return ident;
    }

    let a2 = a * a;
    let low_degree = |b: &[f64], powers: &[&OMatrix<C64, D, D>]| {
        // powers = [I, A², A⁴, ...]
        let mut u = powers[0] * re(b[1]);
        let mut v = powers[0] * re(b[0]);
        for (k, p) in powers.iter().enumerate().skip(1) {
            u += *p * re(b[2 * k + 1]);
            v += *p * re(b[2 * k]);
        }
        (a * u, v)
    };

    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = low_degree(&B3, &[&ident, &a2]);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let a4 = &a2 * &a2;
        let (u, v) = low_degree(&B5, &[&ident, &a2, &a4]);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let (u, v) = low_degree(&B7, &[&ident, &a2, &a4, &a6]);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let a8 = &a6 * &a2;
        let (u, v) = low_degree(&B9, &[&ident, &a2, &a4, &a6, &a8]);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scale = re(0.5f64.powi(s));
        let a1 = a * scale;
        let a2 = &a1 * &a1;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let b = &B13;
        let inner_u = &a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]);
        let u = &a1
            * (&a6 * inner_u
                + &a6 * re(b[7])
                + &a4 * re(b[5])
                + &a2 * re(b[3])
                + &ident * re(b[1]));
        let inner_v = &a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]);
        let v = &a6 * inner_v + &a6 * re(b[6]) + &a4 * re(b[4]) + &a2 * re(b[2]) + &ident * re(b[0]);
        (u, v, s)
    };

    let p = &v + &u;
    let q = v - u;
    let mut result = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular after scaling");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
