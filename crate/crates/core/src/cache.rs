//! On-disk JSON cache of truncated affine modules.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine::{irreducible_truncation_with, ModuleBlock, ModuleOptions, PbwMonomial, TruncatedModule};
use crate::error::{Error, Result};
use crate::exact::{q_from_string, q_to_string};
use crate::lie::{orthonormal_structure_constants, root_system, CartanType, Q};

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "LOOP_INDEX_CACHE_DIR";
/// Bumped whenever the snapshot layout changes; mismatching files are rebuilt.
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BlockSnapshot {
    energy: u32,
    sl2_weight: i32,
    offset: usize,
    verma_dim: usize,
    pivot_monomials: Vec<PbwMonomial>,
    pivot_values: Vec<String>,
    pivot_factor: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct ModuleSnapshot {
    format_version: u32,
    algebra: String,
    level: u32,
    highest_weight: u32,
    cutoff: u32,
    blocks: Vec<BlockSnapshot>,
    energies: Vec<u32>,
    sl2_weights: Vec<i32>,
    /// Column-major entries, `[gen][mode]`.
    chevalley: Vec<Vec<Vec<f64>>>,
    /// Column-major `(re, im)` entries, `[a][mode]`.
    currents: Vec<Vec<Vec<(f64, f64)>>>,
    conformal_weight: (i64, i64),
    lowest_vector: usize,
}

fn snapshot(m: &TruncatedModule) -> ModuleSnapshot {
    ModuleSnapshot {
        format_version: CACHE_FORMAT_VERSION,
        algebra: m.algebra.to_string(),
        level: m.level,
        highest_weight: m.highest_weight,
        cutoff: m.cutoff,
        blocks: m
            .blocks
            .iter()
            .map(|b| BlockSnapshot {
                energy: b.energy,
                sl2_weight: b.sl2_weight,
                offset: b.offset,
                verma_dim: b.verma_dim,
                pivot_monomials: b.pivot_monomials.clone(),
                pivot_values: b.pivot_values.iter().map(q_to_string).collect(),
                pivot_factor: b.pivot_factor.iter().map(|r| r.iter().map(q_to_string).collect()).collect(),
            })
            .collect(),
        energies: m.energies.clone(),
        sl2_weights: m.sl2_weights.clone(),
        chevalley: m.chevalley.iter().map(|per| per.iter().map(|x| x.as_slice().to_vec()).collect()).collect(),
        currents: m
            .currents
            .iter()
            .map(|per| per.iter().map(|x| x.iter().map(|z| (z.re, z.im)).collect()).collect())
            .collect(),
        conformal_weight: (*m.conformal_weight.numer(), *m.conformal_weight.denom()),
        lowest_vector: m.lowest_vector,
    }
}

fn restore(s: ModuleSnapshot) -> Result<TruncatedModule> {
    let algebra: CartanType = s.algebra.parse()?;
    let structure = orthonormal_structure_constants(&root_system(algebra)?)?;
    let dim = s.energies.len();
    let bad = || Error::Config("corrupt module cache entry".into());
    let blocks = s
        .blocks
        .into_iter()
        .map(|b| {
            Ok(ModuleBlock {
                energy: b.energy,
                sl2_weight: b.sl2_weight,
                offset: b.offset,
                verma_dim: b.verma_dim,
                pivot_monomials: b.pivot_monomials,
                pivot_values: b.pivot_values.iter().map(|x| q_from_string(x)).collect::<Result<_>>()?,
                pivot_factor: b
                    .pivot_factor
                    .iter()
                    .map(|r| r.iter().map(|x| q_from_string(x)).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let square = |v: Vec<f64>| -> Result<DMatrix<f64>> {
        if v.len() != dim * dim {
            return Err(bad());
        }
        Ok(DMatrix::from_vec(dim, dim, v))
    };
    let chevalley = s
        .chevalley
        .into_iter()
        .map(|per| per.into_iter().map(square).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let currents = s
        .currents
        .into_iter()
        .map(|per| {
            per.into_iter()
                .map(|v| {
                    if v.len() != dim * dim {
                        return Err(bad());
                    }
                    Ok(DMatrix::from_iterator(dim, dim, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (p, q) = s.conformal_weight;
    if q == 0 {
        return Err(bad());
    }
    Ok(TruncatedModule {
        algebra,
        level: s.level,
        highest_weight: s.highest_weight,
        cutoff: s.cutoff,
        blocks,
        energies: s.energies,
        sl2_weights: s.sl2_weights,
        chevalley,
        currents,
        structure,
        conformal_weight: Q::new(p, q),
        lowest_vector: s.lowest_vector,
    })
}

#[derive(Debug, Clone)]
pub struct ModuleCache {
    dir: PathBuf,
}

impl ModuleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ModuleCache { dir: dir.into() }
    }

    /// Cache rooted at `$LOOP_INDEX_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(|v| ModuleCache::new(PathBuf::from(v)))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, algebra: CartanType, level: u32, mu: u32, cutoff: u32) -> PathBuf {
        self.dir
            .join(format!("module-v{CACHE_FORMAT_VERSION}-{algebra}-l{level}-mu{mu}-n{cutoff}.json"))
    }

    /// Cached module, or `None` when absent or written by another format version.
    pub fn load(&self, algebra: CartanType, level: u32, mu: u32, cutoff: u32) -> Result<Option<TruncatedModule>> {
        let path = self.path(algebra, level, mu, cutoff);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let snap: ModuleSnapshot = serde_json::from_str(&text)?;
        if snap.format_version != CACHE_FORMAT_VERSION {
            return Ok(None);
        }
        restore(snap).map(Some)
    }

    pub fn store(&self, m: &TruncatedModule) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(m.algebra, m.level, m.highest_weight, m.cutoff);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&snapshot(m))?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Loads the module or builds and stores it; the flag reports a cache hit.
    pub fn get_or_build(
        &self,
        algebra: CartanType,
        mu: u32,
        level: u32,
        cutoff: u32,
        opts: ModuleOptions,
    ) -> Result<(TruncatedModule, bool)> {
        if let Some(m) = self.load(algebra, level, mu, cutoff)? {
            return Ok((m, true));
        }
        let m = irreducible_truncation_with(algebra, mu, level, cutoff, opts)?;
        self.store(&m)?;
        Ok((m, false))
    }
}

/// Builds a module, going through the cache when one is given.
pub fn module_with_cache(
    cache: Option<&ModuleCache>,
    algebra: CartanType,
    mu: u32,
    level: u32,
    cutoff: u32,
    opts: ModuleOptions,
) -> Result<TruncatedModule> {
    match cache {
        Some(c) => c.get_or_build(algebra, mu, level, cutoff, opts).map(|(m, _)| m),
        None => irreducible_truncation_with(algebra, mu, level, cutoff, opts),
    }
}
