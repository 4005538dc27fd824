//! Bit-erasure accounting for the digital half of a time-reversal mirror.
//!
//! Three pipelines store `k` samples of `m` bits and play them back reversed:
//!
//! | variant             | erased bits                    | gate count                      |
//! |---------------------|--------------------------------|---------------------------------|
//! | `irreversible_time` | `k·m` (register overwritten)   | `k·m`                           |
//! | `irreversible_fft`  | `k·m + 2·m·k·log2 k`           | `k·m + 2·m·k·log2 k`            |
//! | `reversible`        | `0`                            | `2·k·m + REVERSIBLE_GATES_PER_SAMPLE·k` |
//!
//! The FFT term charges each of the `log2 k` butterfly stages with `2·k·m`
//! temporary bits that an irreversible implementation discards. The
//! reversible pipeline stores words by XOR into a blank register and
//! un-stores them by XOR again, so it never erases; it pays for this with
//! `m` XOR gates in each direction.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ErasureError {
    #[error("waiting time k and ADC resolution m must be at least 1 (got k={k}, m={m})")]
    NonPositive { k: u64, m: u32 },
    #[error("FFT pipeline needs k to be a power of two, got {0}")]
    NotPowerOfTwo(u64),
    #[error("ADC resolution {0} exceeds the 64-bit word size")]
    WordTooWide(u32),
    #[error("register holds {capacity} samples, {requested} offered")]
    Overflow { capacity: usize, requested: usize },
    #[error("sample {index} = {value:#x} does not fit in {bits} bits")]
    SampleTooWide { index: usize, value: u64, bits: u32 },
    #[error("sweep ranges must be non-empty")]
    EmptyRange,
}

pub type Result<T> = std::result::Result<T, ErasureError>;

/// Control gates per sample in the reversible register (address counter
/// step and enable, once on store and once on un-store).
pub const REVERSIBLE_GATES_PER_SAMPLE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    IrreversibleTime,
    IrreversibleFft,
    Reversible,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::IrreversibleTime, Variant::IrreversibleFft, Variant::Reversible];

    pub fn label(self) -> &'static str {
        match self {
            Variant::IrreversibleTime => "irreversible_time",
            Variant::IrreversibleFft => "irreversible_fft",
            Variant::Reversible => "reversible",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub variant: Variant,
    pub adc_bits: u32,
    pub waiting_samples: u64,
}

impl PipelineSpec {
    pub fn new(variant: Variant, adc_bits: u32, waiting_samples: u64) -> Result<Self> {
        let spec = Self {
            variant,
            adc_bits,
            waiting_samples,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, m) = (self.waiting_samples, self.adc_bits);
        if k == 0 || m == 0 {
            return Err(ErasureError::NonPositive { k, m });
        }
        if self.variant == Variant::IrreversibleFft && !k.is_power_of_two() {
            return Err(ErasureError::NotPowerOfTwo(k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureLedger {
    pub erased_bits: u64,
    pub gate_count: u64,
}

pub fn count_erasures(spec: &PipelineSpec) -> Result<ErasureLedger> {
    spec.validate()?;
    let k = spec.waiting_samples;
    let m = u64::from(spec.adc_bits);
    let register = k * m;
    Ok(match spec.variant {
        Variant::IrreversibleTime => ErasureLedger {
            erased_bits: register,
            gate_count: register,
        },
        Variant::IrreversibleFft => {
            let stages = u64::from(k.trailing_zeros());
            let butterflies = 2 * m * k * stages;
            ErasureLedger {
                erased_bits: register + butterflies,
                gate_count: register + butterflies,
            }
        }
        Variant::Reversible => ErasureLedger {
            erased_bits: 0,
            gate_count: 2 * register + REVERSIBLE_GATES_PER_SAMPLE * k,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: Variant,
    pub waiting_samples: u64,
    pub adc_bits: u32,
    pub ledger: ErasureLedger,
}

/// Ledgers for every `(k, m)` and every variant, ordered by variant, then
/// `k`, then `m`.
pub fn sweep_erasures(k_range: &[u64], m_range: &[u32]) -> Result<Vec<SweepRow>> {
    if k_range.is_empty() || m_range.is_empty() {
        return Err(ErasureError::EmptyRange);
    }
    let mut rows = Vec::with_capacity(3 * k_range.len() * m_range.len());
    for variant in Variant::ALL {
        for &k in k_range {
            for &m in m_range {
                let spec = PipelineSpec::new(variant, m, k)?;
                rows.push(SweepRow {
                    variant,
                    waiting_samples: k,
                    adc_bits: m,
                    ledger: count_erasures(&spec)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `variant,k,m,erased_bits,gate_count` CSV.
pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "variant,k,m,erased_bits,gate_count")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.variant, r.waiting_samples, r.adc_bits, r.ledger.erased_bits, r.ledger.gate_count
        )?;
    }
    Ok(())
}

/// Behavioural model of a reversible LIFO sample register.
///
/// Words are XOR-ed into blank cells on store and XOR-ed out again on
/// unstore, so the memory returns to all-zero and no bit is ever
/// overwritten. Overwriting a non-blank cell would be an erasure and is
/// counted as one.
#[derive(Debug, Clone)]
pub struct ReversibleRegister {
    cells: Vec<u64>,
    bits: u32,
    depth: usize,
    erased_bits: u64,
    gate_ops: u64,
}

impl ReversibleRegister {
    pub fn new(capacity: usize, bits: u32) -> Result<Self> {
        if bits == 0 || capacity == 0 {
            return Err(ErasureError::NonPositive {
                k: capacity as u64,
                m: bits,
            });
        }
        if bits > 64 {
            return Err(ErasureError::WordTooWide(bits));
        }
        Ok(Self {
            cells: vec![0; capacity],
            bits,
            depth: 0,
            erased_bits: 0,
            gate_ops: 0,
        })
    }

    fn mask(&self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    pub fn store(&mut self, word: u64) -> Result<()> {
        if self.depth == self.cells.len() {
            return Err(ErasureError::Overflow {
                capacity: self.cells.len(),
                requested: self.depth + 1,
            });
        }
        let cell = &mut self.cells[self.depth];
        self.erased_bits += u64::from(cell.count_ones());
        *cell ^= word;
        self.depth += 1;
        self.gate_ops += u64::from(self.bits) + REVERSIBLE_GATES_PER_SAMPLE / 2;
        Ok(())
    }

    pub fn unstore(&mut self) -> Option<u64> {
        if self.depth == 0 {
            return None;
        }
        self.depth -= 1;
        let word = self.cells[self.depth];
        // Uncompute: XOR the copied word back out, restoring the blank cell.
        self.cells[self.depth] ^= word;
        self.gate_ops += u64::from(self.bits) + REVERSIBLE_GATES_PER_SAMPLE / 2;
        Some(word)
    }

    pub fn is_blank(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    pub fn ledger(&self) -> ErasureLedger {
        ErasureLedger {
            erased_bits: self.erased_bits,
            gate_count: self.gate_ops,
        }
    }
}

/// Stores `samples` and plays them back last-in first-out.
pub fn simulate_reversible_register(samples: &[u64], bits: u32, capacity: usize) -> Result<(Vec<u64>, ErasureLedger)> {
    let mut reg = ReversibleRegister::new(capacity, bits)?;
    if samples.len() > capacity {
        return Err(ErasureError::Overflow {
            capacity,
            requested: samples.len(),
        });
    }
    let mask = reg.mask();
    for (index, &value) in samples.iter().enumerate() {
        if value & !mask != 0 {
            return Err(ErasureError::SampleTooWide { index, value, bits });
        }
    }
    for &w in samples {
        reg.store(w)?;
    }
    let out: Vec<u64> = std::iter::from_fn(|| reg.unstore()).collect();
    debug_assert!(reg.is_blank());
    Ok((out, reg.ledger()))
}
