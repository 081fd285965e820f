//! `TNCK` checkpoint container, version 1.
//!
//! Little-endian throughout. Every file is
//!
//! ```text
//! magic  b"TNCK"
//! u32    version (= 1)
//! u8     kind: 1 = MpsVector, 2 = MpoOperator, 3 = FilterRun
//! body
//! ```
//!
//! A tensor is `u32 rank, rank x u64 extents, prod(extents) x (f64 re, f64 im)`
//! in row-major order. An MPS body is `u32 phys_dim, u32 len, i64 center
//! (-1 = none), len x tensor`; an MPO body is `u32 phys_dim, u32 len,
//! len x tensor`. A FilterRun body is
//!
//! ```text
//! u64 order_done, f64 alpha, f64 recurrence_discarded, u64 max_recurrence_bond
//! u8  has_t_prev, [mps t_prev], mps t_curr
//! accumulator (u64 order, f64 discarded, mps)
//! u32 pending count, pending accumulators
//! u32 stored count, stored (u64 degree, mps)
//! u32 checkpoint count, checkpoint records
//! ```
//!
//! A checkpoint record is `u64 order, f64 delta_sq, f64 delta_sq_physical,
//! f64 frobenius_sq, f64 trace_re, f64 trace_im, f64 osee_half,
//! u64 max_bond_used, f64 cumulative_discarded_weight`, then two string-keyed
//! maps (observables, imaginary residues), each `u32 count, count x (u32 byte
//! length, utf-8 label, f64 value)`. The width is recomputed from the order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::chebyshev::{sigma_for_order, Accumulator, CheckpointRecord, FilterRun};
use crate::error::{Error, Result};
use crate::mps::{MpoOperator, MpsVector};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"TNCK";
pub const VERSION: u32 = 1;

const KIND_MPS: u8 = 1;
const KIND_MPO: u8 = 2;
const KIND_RUN: u8 = 3;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.0.write_all(b)?)
    }
    fn u8(&mut self, x: u8) -> Result<()> {
        self.bytes(&[x])
    }
    fn u32(&mut self, x: usize) -> Result<()> {
        let x = u32::try_from(x).map_err(|_| Error::Format(format!("{x} does not fit in u32")))?;
        self.bytes(&x.to_le_bytes())
    }
    fn u64(&mut self, x: usize) -> Result<()> {
        self.bytes(&(x as u64).to_le_bytes())
    }
    fn i64(&mut self, x: i64) -> Result<()> {
        self.bytes(&x.to_le_bytes())
    }
    fn f64(&mut self, x: f64) -> Result<()> {
        self.bytes(&x.to_le_bytes())
    }

    fn header(&mut self, kind: u8) -> Result<()> {
        self.bytes(MAGIC)?;
        self.u32(VERSION as usize)?;
        self.u8(kind)
    }

    fn tensor(&mut self, t: &DenseTensor) -> Result<()> {
        self.u32(t.rank())?;
        for &e in t.shape() {
            self.u64(e)?;
        }
        for z in t.data() {
            self.f64(z.re)?;
            self.f64(z.im)?;
        }
        Ok(())
    }

    fn mps(&mut self, v: &MpsVector) -> Result<()> {
        self.u32(v.phys_dim())?;
        self.u32(v.len())?;
        self.i64(v.canonical_center().map_or(-1, |c| c as i64))?;
        v.sites().iter().try_for_each(|t| self.tensor(t))
    }

    fn mpo(&mut self, o: &MpoOperator) -> Result<()> {
        self.u32(o.phys_dim())?;
        self.u32(o.len())?;
        o.sites().iter().try_for_each(|t| self.tensor(t))
    }

    fn accumulator(&mut self, a: &Accumulator) -> Result<()> {
        self.u64(a.order)?;
        self.f64(a.discarded)?;
        self.mps(&a.vec)
    }

    fn map(&mut self, m: &BTreeMap<String, f64>) -> Result<()> {
        self.u32(m.len())?;
        for (k, v) in m {
            self.u32(k.len())?;
            self.bytes(k.as_bytes())?;
            self.f64(*v)?;
        }
        Ok(())
    }

    fn record(&mut self, r: &CheckpointRecord) -> Result<()> {
        self.u64(r.order)?;
        for x in [r.delta_sq, r.delta_sq_physical, r.frobenius_sq, r.trace.re, r.trace.im, r.osee_half] {
            self.f64(x)?;
        }
        self.u64(r.max_bond_used)?;
        self.f64(r.cumulative_discarded_weight)?;
        self.map(&r.observables)?;
        self.map(&r.imag_residues)
    }

    fn run(&mut self, run: &FilterRun) -> Result<()> {
        self.u64(run.order_done)?;
        self.f64(run.alpha)?;
        self.f64(run.recurrence_discarded)?;
        self.u64(run.max_recurrence_bond)?;
        match &run.t_prev {
            Some(p) => {
                self.u8(1)?;
                self.mps(p)?;
            }
            None => self.u8(0)?,
        }
        self.mps(&run.t_curr)?;
        self.accumulator(&run.accumulator)?;
        self.u32(run.pending.len())?;
        run.pending.iter().try_for_each(|a| self.accumulator(a))?;
        self.u32(run.stored.len())?;
        for (m, v) in &run.stored {
            self.u64(*m)?;
            self.mps(v)?;
        }
        self.u32(run.checkpoints.len())?;
        run.checkpoints.iter().try_for_each(|r| self.record(r))
    }
}

struct Reader<R: Read>(R);

/// Guards allocations driven by header fields.
const MAX_ELEMENTS: u64 = 1 << 32;

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut b = [0u8; K];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated container".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes()?) as usize)
    }
    fn u64(&mut self) -> Result<usize> {
        let x = u64::from_le_bytes(self.bytes()?);
        usize::try_from(x).map_err(|_| Error::Format(format!("{x} does not fit in usize")))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn header(&mut self, kind: u8) -> Result<()> {
        if &self.bytes::<4>()? != MAGIC {
            return Err(Error::Format("not a TNCK container".into()));
        }
        let version = self.u32()?;
        if version != VERSION as usize {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let k = self.u8()?;
        if k != kind {
            return Err(Error::Format(format!("expected kind {kind}, found {k}")));
        }
        Ok(())
    }

    fn tensor(&mut self) -> Result<DenseTensor> {
        let rank = self.u32()?;
        if rank > 8 {
            return Err(Error::Format(format!("implausible rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.u64()).collect::<Result<Vec<_>>>()?;
        let count = shape.iter().try_fold(1u64, |a, &e| a.checked_mul(e as u64));
        match count {
            Some(c) if c <= MAX_ELEMENTS => {}
            _ => return Err(Error::Format(format!("implausible shape {shape:?}"))),
        }
        let len: usize = shape.iter().product();
        let data = (0..len)
            .map(|_| Ok(C64::new(self.f64()?, self.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        DenseTensor::new(shape, data)
    }

    fn sites(&mut self, len: usize) -> Result<Vec<DenseTensor>> {
        if len > 1 << 20 {
            return Err(Error::Format(format!("implausible chain length {len}")));
        }
        (0..len).map(|_| self.tensor()).collect()
    }

    fn mps(&mut self) -> Result<MpsVector> {
        let d = self.u32()?;
        let len = self.u32()?;
        let center = self.i64()?;
        let sites = self.sites(len)?;
        let v = MpsVector::new(sites, d)?;
        let center = match center {
            -1 => None,
            c if (0..len as i64).contains(&c) => Some(c as usize),
            c => return Err(Error::Format(format!("canonical center {c} out of range"))),
        };
        Ok(MpsVector::from_parts(v.sites().to_vec(), d, center))
    }

    fn mpo(&mut self) -> Result<MpoOperator> {
        let d = self.u32()?;
        let len = self.u32()?;
        MpoOperator::new(self.sites(len)?, d)
    }

    fn accumulator(&mut self) -> Result<Accumulator> {
        Ok(Accumulator {
            order: self.u64()?,
            discarded: self.f64()?,
            vec: self.mps()?,
        })
    }

    fn map(&mut self) -> Result<BTreeMap<String, f64>> {
        let count = self.u32()?;
        let mut out = BTreeMap::new();
        for _ in 0..count {
            let len = self.u32()?;
            if len > 1 << 16 {
                return Err(Error::Format("implausible label length".into()));
            }
            let mut b = vec![0u8; len];
            self.0.read_exact(&mut b)?;
            let k = String::from_utf8(b).map_err(|_| Error::Format("label is not utf-8".into()))?;
            out.insert(k, self.f64()?);
        }
        Ok(out)
    }

    fn record(&mut self, alpha: f64) -> Result<CheckpointRecord> {
        let order = self.u64()?;
        let mut f = [0.0; 6];
        for x in &mut f {
            *x = self.f64()?;
        }
        Ok(CheckpointRecord {
            order,
            sigma: sigma_for_order(order, alpha).ok(),
            delta_sq: f[0],
            delta_sq_physical: f[1],
            frobenius_sq: f[2],
            trace: C64::new(f[3], f[4]),
            osee_half: f[5],
            max_bond_used: self.u64()?,
            cumulative_discarded_weight: self.f64()?,
            observables: self.map()?,
            imag_residues: self.map()?,
        })
    }

    fn run(&mut self) -> Result<FilterRun> {
        let order_done = self.u64()?;
        let alpha = self.f64()?;
        let recurrence_discarded = self.f64()?;
        let max_recurrence_bond = self.u64()?;
        let t_prev = match self.u8()? {
            0 => None,
            1 => Some(self.mps()?),
            x => return Err(Error::Format(format!("bad t_prev flag {x}"))),
        };
        let t_curr = self.mps()?;
        let accumulator = self.accumulator()?;
        let pending = (0..self.u32()?).map(|_| self.accumulator()).collect::<Result<Vec<_>>>()?;
        let stored = (0..self.u32()?)
            .map(|_| Ok((self.u64()?, self.mps()?)))
            .collect::<Result<Vec<_>>>()?;
        let checkpoints = (0..self.u32()?).map(|_| self.record(alpha)).collect::<Result<Vec<_>>>()?;
        Ok(FilterRun {
            t_prev,
            t_curr,
            accumulator,
            pending,
            order_done,
            checkpoints,
            recurrence_discarded,
            stored,
            alpha,
            max_recurrence_bond,
        })
    }

    fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.0.read(&mut rest)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes after container body".into())),
        }
    }
}

fn write_with(path: &Path, f: impl FnOnce(&mut Writer<BufWriter<File>>) -> Result<()>) -> Result<()> {
    let mut w = Writer(BufWriter::new(File::create(path)?));
    f(&mut w)?;
    w.0.flush()?;
    Ok(())
}

fn read_with<T>(path: &Path, f: impl FnOnce(&mut Reader<BufReader<File>>) -> Result<T>) -> Result<T> {
    let mut r = Reader(BufReader::new(File::open(path)?));
    let out = f(&mut r)?;
    r.finish()?;
    Ok(out)
}

pub fn write_mps(v: &MpsVector, out: &mut impl Write) -> Result<()> {
    let mut w = Writer(out);
    w.header(KIND_MPS)?;
    w.mps(v)
}

pub fn read_mps(input: &mut impl Read) -> Result<MpsVector> {
    let mut r = Reader(input);
    r.header(KIND_MPS)?;
    let v = r.mps()?;
    r.finish()?;
    Ok(v)
}

pub fn save_mps(v: &MpsVector, path: &Path) -> Result<()> {
    write_with(path, |w| {
        w.header(KIND_MPS)?;
        w.mps(v)
    })
}

pub fn load_mps(path: &Path) -> Result<MpsVector> {
    read_with(path, |r| {
        r.header(KIND_MPS)?;
        r.mps()
    })
}

pub fn save_mpo(o: &MpoOperator, path: &Path) -> Result<()> {
    write_with(path, |w| {
        w.header(KIND_MPO)?;
        w.mpo(o)
    })
}

pub fn load_mpo(path: &Path) -> Result<MpoOperator> {
    read_with(path, |r| {
        r.header(KIND_MPO)?;
        r.mpo()
    })
}

pub fn save_run(run: &FilterRun, path: &Path) -> Result<()> {
    write_with(path, |w| {
        w.header(KIND_RUN)?;
        w.run(run)
    })
}

pub fn load_run(path: &Path) -> Result<FilterRun> {
    read_with(path, |r| {
        r.header(KIND_RUN)?;
        r.run()
    })
}
