use super::{BlockInfo, BlockMeta, Mesh, MeshError, MeshKind};
use crate::scalar::{KnotAccumulator, MeshScalar};

/// Harmonic mesh `d_k = delta / k`, `k = 1..=n`, so `t_k = delta * H_{k-1}`.
pub fn build_harmonic_mesh<S: MeshScalar>(delta: S, n: usize) -> Result<Mesh<S>, MeshError> {
    if !(delta > S::zero() && delta <= S::ratio(1, 8)) {
        return Err(MeshError::DeltaOutOfRange(delta.to_f64()));
    }
    if n == 0 {
        return Err(MeshError::Empty);
    }
    let d = (1..=n as u64).map(|k| delta.clone() / S::from_u64(k)).collect();
    Mesh::from_steps(d, MeshKind::Harmonic { delta })
}

/// How the integer parameter of a new block is picked among the admissible
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QChoice {
    /// Smallest admissible integer.
    #[default]
    Minimal,
    /// Smallest admissible integer plus a fixed offset.
    Padded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMeshConfig {
    pub q1: u64,
    pub num_blocks: usize,
    pub q_choice: QChoice,
    /// Stop after this many steps even if the requested blocks are not
    /// complete (used for exact-arithmetic prefixes).
    pub max_len: Option<usize>,
}

impl BlockMeshConfig {
    pub fn new(q1: u64, num_blocks: usize) -> Self {
        Self {
            q1,
            num_blocks,
            q_choice: QChoice::Minimal,
            max_len: None,
        }
    }
}

/// Block mesh truncated at the end of block `num_blocks`.
pub fn build_block_mesh<S: MeshScalar>(q1: u64, num_blocks: usize) -> Result<(Mesh<S>, BlockMeta), MeshError> {
    build_block_mesh_with(&BlockMeshConfig::new(q1, num_blocks))
}

/// Run the block construction.
///
/// Inside block `k` the steps follow `d_{n+1} = d_n / (1 + 64 d_n^2)`. The
/// block closes at the first `n` with `t_{n+1} >= t_{i(k)} + w_k` (ties
/// close it); the next block starts with `d = 1 / Q_{k+1}` where `Q_{k+1}`
/// is chosen from the integers
/// `>= max{ i(k+1), 2^{k+2} w_{k+1}, (1 + 64 d_n^2) / d_n }`.
pub fn build_block_mesh_with<S: MeshScalar>(cfg: &BlockMeshConfig) -> Result<(Mesh<S>, BlockMeta), MeshError> {
    if cfg.q1 < 8 {
        return Err(MeshError::Q1TooSmall(cfg.q1));
    }
    if cfg.num_blocks == 0 {
        return Err(MeshError::NoBlocks);
    }
    if cfg.max_len == Some(0) {
        return Err(MeshError::Empty);
    }
    let sixty_four = S::from_u64(64);

    let mut d: Vec<S> = vec![S::ratio(1, cfg.q1)];
    let mut t: Vec<S> = vec![S::zero()];
    let mut acc = S::Acc::start(S::zero());
    let mut meta = BlockMeta::default();

    let mut k = 1usize;
    let mut q = cfg.q1;
    let mut start = 1usize;
    loop {
        let n = d.len();
        let dn = d[n - 1].clone();
        acc.add(&dn);
        let t_next = acc.value();
        t.push(t_next.clone());

        let w = k as u64 + 1;
        let boundary = t[start - 1].clone() + S::from_u64(w);
        let leaving = t_next >= boundary;
        if leaving {
            let unit_level = t[start - 1].clone() + S::one();
            let j_unit = (start..=n).find(|&j| t[j - 1] >= unit_level).unwrap_or(n);
            meta.blocks.push(BlockInfo { k, w, start, end: n, q, j_unit });
            if k == cfg.num_blocks {
                break;
            }
        }
        if cfg.max_len.is_some_and(|m| n >= m) {
            break;
        }
        if leaving {
            let next = n + 1;
            let width_next = k as u64 + 2;
            let pow = 1u64.checked_shl(k as u32 + 2).ok_or(MeshError::QOverflow { k: k + 1 })?;
            let by_width = pow.checked_mul(width_next).ok_or(MeshError::QOverflow { k: k + 1 })?;
            let by_step = ((S::one() + sixty_four.clone() * dn.clone() * dn.clone()) / dn)
                .ceil_u64()
                .ok_or(MeshError::QOverflow { k: k + 1 })?;
            let q_min = (next as u64).max(by_width).max(by_step);
            q = match cfg.q_choice {
                QChoice::Minimal => q_min,
                QChoice::Padded(pad) => q_min.checked_add(pad).ok_or(MeshError::QOverflow { k: k + 1 })?,
            };
            d.push(S::ratio(1, q));
            k += 1;
            start = next;
        } else {
            d.push(dn.clone() / (S::one() + sixty_four.clone() * dn.clone() * dn));
        }
    }

    let mesh = Mesh::from_parts(d, t, MeshKind::Block { q1: cfg.q1 })?;
    Ok((mesh, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn harmonic_first_steps() {
        let m = build_harmonic_mesh(0.125_f64, 2).unwrap();
        assert_eq!(m.steps(), &[0.125, 0.0625]);
        assert_eq!(&m.knots()[..2], &[0.0, 0.125]);
        let m = build_harmonic_mesh(0.125_f64, 1).unwrap();
        assert_eq!(*m.t(1), 0.0);
    }

    #[test]
    fn harmonic_rejects_bad_delta() {
        assert_eq!(build_harmonic_mesh(0.2_f64, 3), Err(MeshError::DeltaOutOfRange(0.2)));
        assert_eq!(build_harmonic_mesh(0.0_f64, 3), Err(MeshError::DeltaOutOfRange(0.0)));
        assert_eq!(build_harmonic_mesh(-0.1_f64, 3), Err(MeshError::DeltaOutOfRange(-0.1)));
        assert_eq!(build_harmonic_mesh(0.125_f64, 0), Err(MeshError::Empty));
    }

    #[test]
    fn harmonic_knots_are_scaled_harmonic_numbers() {
        let delta = Rational::new(1.into(), 8.into());
        let m = build_harmonic_mesh(delta.clone(), 30).unwrap();
        let mut h = Rational::from_integer(0.into());
        for k in 1..=31u64 {
            assert_eq!(*m.t(k as usize), delta.clone() * h.clone());
            h += Rational::new(1.into(), k.into());
        }
    }

    #[test]
    fn first_block_for_q1_8() {
        let (mesh, meta) = build_block_mesh::<f64>(8, 1).unwrap();
        let b = meta.block(1).unwrap();
        assert_eq!((b.start, b.q, b.w), (1, 8, 2));
        assert_eq!(*mesh.d(1), 0.125);
        assert_eq!(mesh.len(), b.end);
        // closes at the first n with t_{n+1} >= 2
        assert!(*mesh.t(b.end + 1) >= 2.0);
        assert!(*mesh.t(b.end) < 2.0);
        // w_1 / d_max <= #I_1 <= w_1 / d_min + 1
        assert!(b.size() >= 16 && b.size() <= 2 * (8 + 128) + 1, "{}", b.size());
    }

    #[test]
    fn second_block_parameter_is_minimal() {
        let (mesh, meta) = build_block_mesh::<f64>(8, 2).unwrap();
        let b2 = meta.block(2).unwrap();
        let last = b2.start - 1;
        let dl = *mesh.d(last);
        let lower = (b2.start as f64).max(8.0 * 3.0).max((1.0 + 64.0 * dl * dl) / dl);
        assert_eq!(b2.q, lower.ceil() as u64);
        assert_eq!(*mesh.d(b2.start), 1.0 / b2.q as f64);
    }

    #[test]
    fn padded_choice_shifts_q() {
        let mut cfg = BlockMeshConfig::new(8, 2);
        let (_, minimal) = build_block_mesh_with::<f64>(&cfg).unwrap();
        cfg.q_choice = QChoice::Padded(5);
        let (_, padded) = build_block_mesh_with::<f64>(&cfg).unwrap();
        assert_eq!(padded.block(1), minimal.block(1));
        assert_eq!(padded.block(2).unwrap().q, minimal.block(2).unwrap().q + 5);
    }

    #[test]
    fn block_rejects_small_q1() {
        assert_eq!(build_block_mesh::<f64>(7, 2), Err(MeshError::Q1TooSmall(7)));
        assert_eq!(build_block_mesh::<f64>(8, 0), Err(MeshError::NoBlocks));
    }

    #[test]
    fn exact_prefix_agrees_with_floats() {
        let mut cfg = BlockMeshConfig::new(8, 1);
        cfg.max_len = Some(12);
        let (exact, meta) = build_block_mesh_with::<Rational>(&cfg).unwrap();
        assert!(meta.is_empty());
        assert_eq!(exact.len(), 12);
        let (float, _) = build_block_mesh::<f64>(8, 1).unwrap();
        for n in 1..=12 {
            let e = exact.d(n).to_f64();
            assert!((e - float.d(n)).abs() <= 32.0 * f64::EPSILON * e, "n={n}");
            let te = exact.t(n + 1).to_f64();
            assert!((te - float.t(n + 1)).abs() <= 32.0 * f64::EPSILON * te);
        }
    }
}
