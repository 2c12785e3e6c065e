//! Single-producer single-consumer byte ring in shared memory.
//!
//! Layout of the mapped region:
//!
//! | offset | size | field            |
//! |--------|------|------------------|
//! | 0      | 4    | magic `TFMQ`     |
//! | 4      | 4    | capacity (u32)   |
//! | 8      | 8    | read counter     |
//! | 16     | 8    | write counter    |
//! | 24     | cap  | data             |
//!
//! Counters only grow; a position in the data area is `counter & (cap - 1)`.
//! The producer owns the write counter and the consumer the read counter,
//! each published with release ordering after the bytes they cover.

use std::fs::OpenOptions;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use memmap2::MmapMut;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"TFMQ";
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("capacity {0} is not a power of two of at least 8")]
    BadCapacity(usize),
    #[error("not a queue file: bad magic")]
    BadMagic,
    #[error("queue file is {actual} bytes, header says {expected}")]
    BadLength { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Region {
    map: MmapMut,
    capacity: usize,
}

// The mapping is only touched through raw pointers under the SPSC protocol
// above; the counters are atomics.
unsafe impl Send for Region {}
unsafe impl Sync for Region {}

impl Region {
    fn base(&self) -> *mut u8 {
        self.map.as_ptr() as *mut u8
    }

    fn counter(&self, offset: usize) -> &AtomicU64 {
        // Offsets 8 and 16 of a page-aligned mapping are 8-byte aligned.
        unsafe { &*(self.base().add(offset) as *const AtomicU64) }
    }

    fn read_counter(&self) -> &AtomicU64 {
        self.counter(8)
    }

    fn write_counter(&self) -> &AtomicU64 {
        self.counter(16)
    }

    fn data(&self) -> *mut u8 {
        unsafe { self.base().add(HEADER_LEN) }
    }

    fn init(map: MmapMut, capacity: usize) -> Region {
        let mut map = map;
        map[..4].copy_from_slice(&MAGIC);
        map[4..8].copy_from_slice(&(capacity as u32).to_le_bytes());
        map[8..24].fill(0);
        Region { map, capacity }
    }
}

fn check_capacity(capacity: usize) -> Result<(), QueueError> {
    if capacity < 8 || !capacity.is_power_of_two() || capacity > u32::MAX as usize / 2 {
        return Err(QueueError::BadCapacity(capacity));
    }
    Ok(())
}

/// A queue before it is split into its two ends.
pub struct FastQueue {
    region: Arc<Region>,
}

impl FastQueue {
    /// A queue in anonymous memory, for threads of one process.
    pub fn anonymous(capacity: usize) -> Result<FastQueue, QueueError> {
        check_capacity(capacity)?;
        let map = MmapMut::map_anon(HEADER_LEN + capacity)?;
        Ok(FastQueue {
            region: Arc::new(Region::init(map, capacity)),
        })
    }

    /// Creates (or truncates) a file-backed queue another process can open.
    pub fn create(path: impl AsRef<Path>, capacity: usize) -> Result<FastQueue, QueueError> {
        check_capacity(capacity)?;
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        file.set_len((HEADER_LEN + capacity) as u64)?;
        let map = unsafe { MmapMut::map_mut(&file)? };
        Ok(FastQueue {
            region: Arc::new(Region::init(map, capacity)),
        })
    }

    /// Maps an existing queue file, keeping its counters.
    pub fn open(path: impl AsRef<Path>) -> Result<FastQueue, QueueError> {
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        let map = unsafe { MmapMut::map_mut(&file)? };
        if map.len() < HEADER_LEN || map[..4] != MAGIC {
            return Err(QueueError::BadMagic);
        }
        let capacity = u32::from_le_bytes(map[4..8].try_into().expect("4 bytes")) as usize;
        check_capacity(capacity)?;
        if map.len() != HEADER_LEN + capacity {
            return Err(QueueError::BadLength {
                expected: HEADER_LEN + capacity,
                actual: map.len(),
            });
        }
        Ok(FastQueue {
            region: Arc::new(Region { map, capacity }),
        })
    }

    pub fn capacity(&self) -> usize {
        self.region.capacity
    }

    pub fn split(self) -> (QueueWriter, QueueReader) {
        (
            QueueWriter {
                region: self.region.clone(),
            },
            QueueReader {
                region: self.region,
            },
        )
    }

    /// The producer end alone, for a process that only writes.
    pub fn into_writer(self) -> QueueWriter {
        QueueWriter {
            region: self.region,
        }
    }

    pub fn into_reader(self) -> QueueReader {
        QueueReader {
            region: self.region,
        }
    }
}

const SPINS: u32 = 64;

/// Spins briefly, then yields, until `ready` holds or `deadline` passes.
fn wait_until(deadline: Option<Instant>, mut ready: impl FnMut() -> bool) -> bool {
    let mut spins = 0u32;
    loop {
        if ready() {
            return true;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return false;
        }
        if spins < SPINS {
            spins += 1;
            std::hint::spin_loop();
        } else {
            std::thread::yield_now();
        }
    }
}

pub struct QueueWriter {
    region: Arc<Region>,
}

impl QueueWriter {
    pub fn capacity(&self) -> usize {
        self.region.capacity
    }

    /// Bytes that can be written right now.
    pub fn free(&self) -> usize {
        let r = &self.region;
        let w = r.write_counter().load(Ordering::Relaxed);
        let rd = r.read_counter().load(Ordering::Acquire);
        r.capacity - (w - rd) as usize
    }

    /// Appends as much of `bytes` as fits; 0 when the queue is full.
    pub fn write(&mut self, bytes: &[u8]) -> usize {
        let r = &self.region;
        let w = r.write_counter().load(Ordering::Relaxed);
        let n = bytes.len().min(self.free());
        if n == 0 {
            return 0;
        }
        let mask = r.capacity - 1;
        let start = w as usize & mask;
        let first = n.min(r.capacity - start);
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), r.data().add(start), first);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().add(first), r.data(), n - first);
        }
        r.write_counter().store(w + n as u64, Ordering::Release);
        n
    }

    /// Writes all of `bytes`, waiting for the reader as needed. Returns
    /// false if `timeout` expires first; the prefix already written stays.
    pub fn write_all_blocking(&mut self, mut bytes: &[u8], timeout: Option<Duration>) -> bool {
        let deadline = timeout.map(|t| Instant::now() + t);
        while !bytes.is_empty() {
            let n = self.write(bytes);
            bytes = &bytes[n..];
            if !bytes.is_empty() && !wait_until(deadline, || self.free() > 0) {
                return false;
            }
        }
        true
    }
}

pub struct QueueReader {
    region: Arc<Region>,
}

impl QueueReader {
    pub fn capacity(&self) -> usize {
        self.region.capacity
    }

    /// Bytes ready to read.
    pub fn available(&self) -> usize {
        let r = &self.region;
        let w = r.write_counter().load(Ordering::Acquire);
        let rd = r.read_counter().load(Ordering::Relaxed);
        (w - rd) as usize
    }

    /// Moves up to `buf.len()` bytes out of the queue.
    pub fn read(&mut self, buf: &mut [u8]) -> usize {
        let r = &self.region;
        let rd = r.read_counter().load(Ordering::Relaxed);
        let n = buf.len().min(self.available());
        if n == 0 {
            return 0;
        }
        let mask = r.capacity - 1;
        let start = rd as usize & mask;
        let first = n.min(r.capacity - start);
        unsafe {
            std::ptr::copy_nonoverlapping(r.data().add(start), buf.as_mut_ptr(), first);
            std::ptr::copy_nonoverlapping(r.data(), buf.as_mut_ptr().add(first), n - first);
        }
        r.read_counter().store(rd + n as u64, Ordering::Release);
        n
    }

    pub fn read_vec(&mut self, max: usize) -> Vec<u8> {
        let mut buf = vec![0u8; max.min(self.available())];
        let n = self.read(&mut buf);
        buf.truncate(n);
        buf
    }

    /// Fills `buf` completely, waiting for the writer as needed. Returns
    /// false if `timeout` expires first.
    pub fn read_exact_blocking(&mut self, buf: &mut [u8], timeout: Option<Duration>) -> bool {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut done = 0;
        while done < buf.len() {
            done += self.read(&mut buf[done..]);
            if done < buf.len() && !wait_until(deadline, || self.available() > 0) {
                return false;
            }
        }
        true
    }
}
