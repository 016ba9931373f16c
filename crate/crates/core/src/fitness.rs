//! Pseudo-Boolean fitness functions: OneMax, LeadingOnes, Fork, XOR-masked
//! variants and the k-block LeadingOnes/OneMax composition.
//!
//! A [`FitnessSpec`] is the declarative description. On construction it is
//! validated and lowered into a tree of nodes with absolute bit offsets and
//! fully composed XOR masks, so evaluation never allocates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitstring::{chunk, BitString};
use crate::error::{Error, Result};

/// All in-scope functions are integer valued.
pub type FitnessValue = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variant {
    OneMax,
    LeadingOnes,
    Fork { r: usize },
    Masked { mask: BitString, inner: Box<FitnessSpec> },
    LoBlock { k: usize, inner: Box<FitnessSpec> },
    OmBlock { k: usize, inner: Box<FitnessSpec> },
}

/// The unique global optimum of a spec, plus the Fork valley where one exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimumWitness {
    pub optimum: BitString,
    pub optimum_value: FitnessValue,
    pub valley: Option<(BitString, FitnessValue)>,
}

#[derive(Clone)]
pub struct FitnessSpec {
    n: usize,
    variant: Variant,
    witness: OptimumWitness,
    node: Arc<Node>,
}

impl PartialEq for FitnessSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.variant == other.variant
    }
}

impl Eq for FitnessSpec {}

impl fmt::Debug for FitnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FitnessSpec")
            .field("n", &self.n)
            .field("variant", &self.variant)
            .finish()
    }
}

impl FitnessSpec {
    pub fn one_max(n: usize) -> Result<Self> {
        Self::build(n, Variant::OneMax)
    }

    pub fn leading_ones(n: usize) -> Result<Self> {
        Self::build(n, Variant::LeadingOnes)
    }

    pub fn fork(n: usize, r: usize) -> Result<Self> {
        Self::build(n, Variant::Fork { r })
    }

    /// Fork with the last `r` bits inverted, so that `1^n` is the optimum.
    pub fn masked_fork(n: usize, r: usize) -> Result<Self> {
        let mask = BitString::from_runs(&[(false, n.saturating_sub(r)), (true, r.min(n))]);
        Self::masked(mask, Self::fork(n, r)?)
    }

    pub fn masked(mask: BitString, inner: FitnessSpec) -> Result<Self> {
        Self::build(
            inner.n,
            Variant::Masked {
                mask,
                inner: Box::new(inner),
            },
        )
    }

    /// LeadingOnes with `inner.n()`-block `inner`, on strings of length `n`.
    pub fn lo_block(n: usize, inner: FitnessSpec) -> Result<Self> {
        Self::build(
            n,
            Variant::LoBlock {
                k: inner.n,
                inner: Box::new(inner),
            },
        )
    }

    /// OneMax with `inner.n()`-block `inner`, on strings of length `n`.
    pub fn om_block(n: usize, inner: FitnessSpec) -> Result<Self> {
        Self::build(
            n,
            Variant::OmBlock {
                k: inner.n,
                inner: Box::new(inner),
            },
        )
    }

    fn build(n: usize, variant: Variant) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("string length must be positive".into()));
        }
        let witness = match &variant {
            Variant::OneMax | Variant::LeadingOnes => OptimumWitness {
                optimum: BitString::ones(n),
                optimum_value: n as FitnessValue,
                valley: None,
            },
            &Variant::Fork { r } => {
                if r < 2 {
                    return Err(Error::Config(format!("Fork requires r >= 2, got r = {r}")));
                }
                if n < 2 * r {
                    return Err(Error::Config(format!(
                        "Fork requires n >= 2r, got n = {n}, r = {r}"
                    )));
                }
                OptimumWitness {
                    optimum: BitString::from_runs(&[(true, n - r), (false, r)]),
                    optimum_value: n as FitnessValue + 2,
                    valley: Some((
                        BitString::from_runs(&[(false, r), (true, n - r)]),
                        n as FitnessValue + 1,
                    )),
                }
            }
            Variant::Masked { mask, inner } => {
                if mask.len() != n {
                    return Err(Error::Config(format!(
                        "mask length {} does not match string length {n}",
                        mask.len()
                    )));
                }
                let w = &inner.witness;
                OptimumWitness {
                    optimum: w.optimum.xor(mask)?,
                    optimum_value: w.optimum_value,
                    valley: match &w.valley {
                        Some((v, val)) => Some((v.xor(mask)?, *val)),
                        None => None,
                    },
                }
            }
            Variant::LoBlock { k, inner } | Variant::OmBlock { k, inner } => {
                let k = *k;
                if k == 0 || !n.is_multiple_of(k) {
                    return Err(Error::Config(format!(
                        "block length k = {k} must divide n = {n}"
                    )));
                }
                if inner.witness.optimum != BitString::ones(k) {
                    return Err(Error::Config(format!(
                        "block inner function must have unique optimum 1^{k}, found {}",
                        inner.witness.optimum
                    )));
                }
                OptimumWitness {
                    optimum: BitString::ones(n),
                    optimum_value: (n / k) as FitnessValue * inner.witness.optimum_value,
                    valley: None,
                }
            }
        };
        let node = Arc::new(lower(&variant, n, n, 0, None));
        Ok(Self {
            n,
            variant,
            witness,
            node,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn optimum(&self) -> &OptimumWitness {
        &self.witness
    }

    #[inline]
    pub fn optimum_value(&self) -> FitnessValue {
        self.witness.optimum_value
    }

    /// The Fork valley string and its value, for Fork and masked Fork specs.
    pub fn valley(&self) -> Option<&(BitString, FitnessValue)> {
        self.witness.valley.as_ref()
    }

    /// Evaluates the spec at `x`. Panics if `x` has the wrong length.
    #[inline]
    pub fn evaluate(&self, x: &BitString) -> FitnessValue {
        assert_eq!(x.len(), self.n, "bit string length does not match spec");
        self.node.eval(x)
    }

    /// Fork parameter `r` of the innermost Fork, if any.
    pub fn fork_r(&self) -> Option<usize> {
        match &self.variant {
            Variant::Fork { r } => Some(*r),
            Variant::Masked { inner, .. }
            | Variant::LoBlock { inner, .. }
            | Variant::OmBlock { inner, .. } => inner.fork_r(),
            _ => None,
        }
    }

    /// Block length of the outermost block composition, if any.
    pub fn block_k(&self) -> Option<usize> {
        match &self.variant {
            Variant::LoBlock { k, .. } | Variant::OmBlock { k, .. } => Some(*k),
            Variant::Masked { inner, .. } => inner.block_k(),
            _ => None,
        }
    }

    /// Short name used in CSV output, e.g. `lo_block(fork_masked)`.
    pub fn label(&self) -> String {
        match &self.variant {
            Variant::OneMax => "onemax".into(),
            Variant::LeadingOnes => "leadingones".into(),
            Variant::Fork { .. } => "fork".into(),
            Variant::Masked { inner, mask } => {
                if let Variant::Fork { r } = inner.variant {
                    if *mask == BitString::from_runs(&[(false, self.n - r), (true, r)]) {
                        return "fork_masked".into();
                    }
                }
                format!("masked({})", inner.label())
            }
            Variant::LoBlock { inner, .. } => format!("lo_block({})", inner.label()),
            Variant::OmBlock { inner, .. } => format!("om_block({})", inner.label()),
        }
    }
}

// Lowered evaluation tree ------------------------------------------------------

enum Node {
    OneMax(Range),
    LeadingOnes(Range),
    Fork { range: Range, r: usize },
    LoBlocks { range: Range, k: usize, blocks: Vec<Node> },
    OmBlocks(Vec<Node>),
}

/// A window `[off, off + len)` of the full string, read through an optional
/// full-length XOR mask.
struct Range {
    off: usize,
    len: usize,
    mask: Option<Arc<BitString>>,
}

fn lower(
    variant: &Variant,
    total: usize,
    len: usize,
    off: usize,
    mask: Option<Arc<BitString>>,
) -> Node {
    let range = |mask: Option<Arc<BitString>>| Range { off, len, mask };
    match variant {
        Variant::OneMax => Node::OneMax(range(mask)),
        Variant::LeadingOnes => Node::LeadingOnes(range(mask)),
        &Variant::Fork { r } => Node::Fork {
            range: range(mask),
            r,
        },
        Variant::Masked { mask: m, inner } => {
            // Shift the local mask to its absolute offset and fold it into the
            // mask inherited from enclosing nodes.
            let mut composed = match &mask {
                Some(p) => (**p).clone(),
                None => BitString::zeros(total),
            };
            for i in 0..len {
                if m.get(i) {
                    composed.flip(off + i);
                }
            }
            let composed = (composed.count_ones() > 0).then(|| Arc::new(composed));
            lower(&inner.variant, total, len, off, composed)
        }
        Variant::LoBlock { k, inner } => Node::LoBlocks {
            blocks: (0..len / k)
                .map(|i| lower(&inner.variant, total, *k, off + i * k, mask.clone()))
                .collect(),
            range: range(mask),
            k: *k,
        },
        Variant::OmBlock { k, inner } => Node::OmBlocks(
            (0..len / k)
                .map(|i| lower(&inner.variant, total, *k, off + i * k, mask.clone()))
                .collect(),
        ),
    }
}

impl Range {
    /// Iterates `(chunk, width)` pairs of masked bits covering `[from, from + len)`.
    #[inline]
    fn chunks<'a>(
        &'a self,
        x: &'a BitString,
        from: usize,
        len: usize,
    ) -> impl Iterator<Item = (u64, usize)> + 'a {
        let end = from + len;
        (from..end).step_by(64).map(move |start| {
            let width = (end - start).min(64);
            let mut v = chunk(x.words(), start, width);
            if let Some(m) = &self.mask {
                v ^= chunk(m.words(), start, width);
            }
            (v, width)
        })
    }

    #[inline]
    fn is_whole(&self, x: &BitString) -> bool {
        self.off == 0 && self.len == x.len() && self.mask.is_none()
    }

    #[inline]
    fn count_ones(&self, x: &BitString) -> usize {
        if self.is_whole(x) {
            return x.count_ones();
        }
        self.chunks(x, self.off, self.len)
            .map(|(v, _)| v.count_ones() as usize)
            .sum()
    }

    #[inline]
    fn leading_ones(&self, x: &BitString) -> usize {
        if self.is_whole(x) {
            return x.leading_ones();
        }
        let mut total = 0;
        for (v, width) in self.chunks(x, self.off, self.len) {
            let t = (v.trailing_ones() as usize).min(width);
            total += t;
            if t < width {
                break;
            }
        }
        total
    }

    /// True iff every bit of the sub-window `[off + from, off + from + count)` is zero.
    #[inline]
    fn is_zero(&self, x: &BitString, from: usize, count: usize) -> bool {
        self.chunks(x, self.off + from, count).all(|(v, _)| v == 0)
    }
}

impl Node {
    fn eval(&self, x: &BitString) -> FitnessValue {
        match self {
            Node::OneMax(range) => range.count_ones(x) as FitnessValue,
            Node::LeadingOnes(range) => range.leading_ones(x) as FitnessValue,
            Node::Fork { range, r } => {
                let ones = range.count_ones(x);
                let len = range.len;
                if ones == len - r {
                    if range.is_zero(x, 0, *r) {
                        return len as FitnessValue + 1;
                    }
                    if range.is_zero(x, len - r, *r) {
                        return len as FitnessValue + 2;
                    }
                }
                ones as FitnessValue
            }
            Node::LoBlocks { range, k, blocks } => {
                let prefix = range.leading_ones(x);
                blocks
                    .iter()
                    .enumerate()
                    .take_while(|(i, _)| i * k <= prefix)
                    .map(|(_, b)| b.eval(x))
                    .sum()
            }
            Node::OmBlocks(blocks) => blocks.iter().map(|b| b.eval(x)).sum(),
        }
    }
}

// Operation-level helpers ------------------------------------------------------

pub fn eval_onemax(x: &BitString) -> FitnessValue {
    x.count_ones() as FitnessValue
}

pub fn eval_leadingones(x: &BitString) -> FitnessValue {
    x.leading_ones() as FitnessValue
}

pub fn eval_fork(x: &BitString, r: usize) -> Result<FitnessValue> {
    Ok(FitnessSpec::fork(x.len(), r)?.evaluate(x))
}

pub fn eval_masked(x: &BitString, mask: &BitString, inner: &FitnessSpec) -> Result<FitnessValue> {
    if x.len() != mask.len() {
        return Err(Error::Config(format!(
            "mask length {} does not match string length {}",
            mask.len(),
            x.len()
        )));
    }
    Ok(FitnessSpec::masked(mask.clone(), inner.clone())?.evaluate(x))
}

pub fn eval_lo_block(x: &BitString, inner: &FitnessSpec) -> Result<FitnessValue> {
    Ok(FitnessSpec::lo_block(x.len(), inner.clone())?.evaluate(x))
}

pub fn eval_om_block(x: &BitString, inner: &FitnessSpec) -> Result<FitnessValue> {
    Ok(FitnessSpec::om_block(x.len(), inner.clone())?.evaluate(x))
}

pub fn optimum_of(spec: &FitnessSpec) -> OptimumWitness {
    spec.witness.clone()
}

// JSON form -------------------------------------------------------------------

/// JSON description of a fitness function. `n` may be omitted when the
/// length is supplied externally (scenario templates); nested block inners
/// always take their length from `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecConfig {
    #[serde(flatten)]
    pub variant: VariantConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VariantConfig {
    #[serde(alias = "one_max")]
    Onemax,
    #[serde(alias = "leading_ones")]
    Leadingones,
    Fork {
        r: usize,
        #[serde(default)]
        masked: bool,
    },
    Masked {
        mask: String,
        inner: Box<SpecConfig>,
    },
    LoBlock {
        k: usize,
        inner: Box<SpecConfig>,
    },
    OmBlock {
        k: usize,
        inner: Box<SpecConfig>,
    },
}

impl SpecConfig {
    /// Builds the spec, taking `n` from the document or, failing that, `n_default`.
    pub fn build(&self, n_default: Option<usize>) -> Result<FitnessSpec> {
        let n = self
            .n
            .or(n_default)
            .ok_or_else(|| Error::Config("fitness spec needs a length n".into()))?;
        match &self.variant {
            VariantConfig::Onemax => FitnessSpec::one_max(n),
            VariantConfig::Leadingones => FitnessSpec::leading_ones(n),
            &VariantConfig::Fork { r, masked: false } => FitnessSpec::fork(n, r),
            &VariantConfig::Fork { r, masked: true } => FitnessSpec::masked_fork(n, r),
            VariantConfig::Masked { mask, inner } => {
                let mask: BitString = mask.parse()?;
                FitnessSpec::masked(mask, inner.build(Some(n))?)
            }
            VariantConfig::LoBlock { k, inner } => FitnessSpec::lo_block(n, inner.build_inner(*k)?),
            VariantConfig::OmBlock { k, inner } => FitnessSpec::om_block(n, inner.build_inner(*k)?),
        }
    }

    fn build_inner(&self, k: usize) -> Result<FitnessSpec> {
        match self.n {
            Some(m) if m != k => Err(Error::Config(format!(
                "block inner length {m} does not match k = {k}"
            ))),
            _ => self.build(Some(k)),
        }
    }
}
