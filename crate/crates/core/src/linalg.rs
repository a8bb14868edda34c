//! Small dense helpers shared by the prior, model and ridge modules.

use nalgebra::DMatrix;

/// Relative tolerance on the pivoted-QR diagonal used for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Builds an `n × p` matrix from row vectors of equal length `p`.
pub fn rows_to_matrix<'a, I>(rows: I, p: usize) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.iter().copied()).collect();
    let n = flat.len() / p.max(1);
    DMatrix::from_row_slice(n, p, &flat)
}

/// Numerical rank from a column-pivoted QR factorization.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > RANK_RTOL * largest).count()
}

/// Unit vectors spanning the (numerical) null space of `m`.
pub fn null_directions(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let p = m.ncols();
    // pad with zero rows so the SVD yields a full set of right singular vectors
    let padded = if m.nrows() < p {
        let mut z = DMatrix::zeros(p, p);
        z.view_mut((0, 0), (m.nrows(), p)).copy_from(m);
        z
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= RANK_RTOL * largest.max(f64::MIN_POSITIVE))
        .map(|(i, _)| v_t.row(i).iter().copied().collect())
        .collect()
}
