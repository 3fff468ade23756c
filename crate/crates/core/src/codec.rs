//! Systematic MDS erasure codec over GF(2^8) with strip batching: one high
//! resolution (N, K) strip-level code doubles as an (N/m, K/m) chunk-level
//! code for every m dividing both, by treating m consecutive strips as one
//! chunk.

use crate::error::{Error, Result};

/// GF(2^8) arithmetic on the primitive polynomial x^8+x^4+x^3+x^2+1 (0x11D),
/// via log/antilog tables generated at compile time.
mod gf256 {
    const POLY: u16 = 0x11D;

    const fn build_tables() -> ([u8; 512], [u8; 256]) {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        let mut i = 0;
        while i < 255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= POLY;
            }
            i += 1;
        }
        // doubled table lets mul skip the mod-255 reduction
        let mut j = 0;
        while j < 512 {
            exp[j] = exp[j % 255];
            j += 1;
        }
        (exp, log)
    }

    const TABLES: ([u8; 512], [u8; 256]) = build_tables();
    const EXP: [u8; 512] = TABLES.0;
    const LOG: [u8; 256] = TABLES.1;

    pub fn mul(a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
        }
    }

    pub fn inv(a: u8) -> u8 {
        debug_assert!(a != 0);
        EXP[255 - LOG[a as usize] as usize]
    }

    /// a^e with the 0^0 = 1 convention.
    pub fn pow(a: u8, e: u32) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        EXP[(LOG[a as usize] as usize * e as usize) % 255]
    }

    /// In-place Gaussian elimination; returns the inverse or None when the
    /// matrix is singular. `dim x dim`, row-major.
    pub fn invert_matrix(m: &[u8], dim: usize) -> Option<Vec<u8>> {
        let mut a = m.to_vec();
        let mut inv_m = vec![0u8; dim * dim];
        for i in 0..dim {
            inv_m[i * dim + i] = 1;
        }
        for col in 0..dim {
            let pivot = (col..dim).find(|&r| a[r * dim + col] != 0)?;
            if pivot != col {
                for j in 0..dim {
                    a.swap(col * dim + j, pivot * dim + j);
                    inv_m.swap(col * dim + j, pivot * dim + j);
                }
            }
            let p_inv = inv(a[col * dim + col]);
            for j in 0..dim {
                a[col * dim + j] = mul(a[col * dim + j], p_inv);
                inv_m[col * dim + j] = mul(inv_m[col * dim + j], p_inv);
            }
            for r in 0..dim {
                if r == col {
                    continue;
                }
                let factor = a[r * dim + col];
                if factor == 0 {
                    continue;
                }
                for j in 0..dim {
                    let t = mul(factor, a[col * dim + j]);
                    a[r * dim + j] ^= t;
                    let t = mul(factor, inv_m[col * dim + j]);
                    inv_m[r * dim + j] ^= t;
                }
            }
        }
        Some(inv_m)
    }

}

/// Byte range of one chunk within a coded file: `strips_per_chunk` strips
/// starting at strip `index * strips_per_chunk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkView {
    pub index: u32,
    pub strips_per_chunk: u32,
    pub offset: usize,
    pub len: usize,
}

/// A systematic (total, data) MDS code over strips of `strip_bytes` bytes.
/// The generator is a Vandermonde matrix normalized so its top block is the
/// identity; any `data` rows of it are invertible.
#[derive(Debug, Clone)]
pub struct StripCode {
    total_strips: u32,
    data_strips: u32,
    strip_bytes: usize,
    /// total x data, row-major.
    generator: Vec<u8>,
}

impl StripCode {
    pub fn systematic(total_strips: u32, data_strips: u32, strip_bytes: usize) -> Result<Self> {
        if data_strips == 0 || total_strips < data_strips {
            return Err(Error::InvalidParameter(format!(
                "strip code needs total >= data >= 1, got total={total_strips}, data={data_strips}"
            )));
        }
        if total_strips > 256 {
            return Err(Error::InvalidParameter(format!(
                "at most 256 strips supported, got {total_strips}"
            )));
        }
        if strip_bytes == 0 {
            return Err(Error::InvalidParameter(
                "strip size must be >= 1 byte".into(),
            ));
        }
        let n = total_strips as usize;
        let k = data_strips as usize;
        // Vandermonde rows over distinct field elements 0..total
        let mut vand = vec![0u8; n * k];
        for (i, row) in vand.chunks_mut(k).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = gf256::pow(i as u8, j as u32);
            }
        }
        // right-multiply by the inverse of the top block to make it systematic
        let top_inv = gf256::invert_matrix(&vand[..k * k], k)
            .expect("square Vandermonde with distinct nodes is invertible");
        let mut generator = vec![0u8; n * k];
        for i in 0..n {
            for j in 0..k {
                let mut acc = 0u8;
                for t in 0..k {
                    acc ^= gf256::mul(vand[i * k + t], top_inv[t * k + j]);
                }
                generator[i * k + j] = acc;
            }
        }
        let code = Self {
            total_strips,
            data_strips,
            strip_bytes,
            generator,
        };
        #[cfg(debug_assertions)]
        if total_strips <= 12 {
            code.verify_mds()
                .expect("systematic Vandermonde construction is MDS");
        }
        Ok(code)
    }

    pub fn total_strips(&self) -> u32 {
        self.total_strips
    }

    pub fn data_strips(&self) -> u32 {
        self.data_strips
    }

    pub fn strip_bytes(&self) -> usize {
        self.strip_bytes
    }

    pub fn data_len(&self) -> usize {
        self.data_strips as usize * self.strip_bytes
    }

    pub fn coded_len(&self) -> usize {
        self.total_strips as usize * self.strip_bytes
    }

    /// Exhaustively check that every (data x data) row submatrix is
    /// invertible. Exponential in the strip count; intended for small codes.
    pub fn verify_mds(&self) -> Result<()> {
        let k = self.data_strips as usize;
        let mut selection: Vec<u32> = (0..self.data_strips).collect();
        loop {
            let m = self.submatrix(&selection);
            if gf256::invert_matrix(&m, k).is_none() {
                return Err(Error::Numeric(format!(
                    "row subset {selection:?} is singular; code is not MDS"
                )));
            }
            if !next_combination(&mut selection, self.total_strips) {
                return Ok(());
            }
        }
    }

    fn submatrix(&self, rows: &[u32]) -> Vec<u8> {
        let k = self.data_strips as usize;
        let mut m = Vec::with_capacity(rows.len() * k);
        for &r in rows {
            m.extend_from_slice(&self.generator[r as usize * k..(r as usize + 1) * k]);
        }
        m
    }

    /// Encode a full file of exactly `data_strips * strip_bytes` bytes into
    /// the coded file of `total_strips * strip_bytes` bytes. The first
    /// `data_strips` strips are the input unchanged.
    pub fn encode(&self, file: &[u8]) -> Result<Vec<u8>> {
        if file.len() != self.data_len() {
            return Err(Error::InvalidParameter(format!(
                "encode input must be exactly {} bytes ({} strips of {}), got {}",
                self.data_len(),
                self.data_strips,
                self.strip_bytes,
                file.len()
            )));
        }
        let k = self.data_strips as usize;
        let b = self.strip_bytes;
        let mut out = vec![0u8; self.coded_len()];
        out[..file.len()].copy_from_slice(file);
        for i in k..self.total_strips as usize {
            let row = &self.generator[i * k..(i + 1) * k];
            let (head, tail) = out.split_at_mut(k * b);
            let dst = &mut tail[(i - k) * b..(i - k + 1) * b];
            for (j, &coeff) in row.iter().enumerate() {
                if coeff == 0 {
                    continue;
                }
                let src = &head[j * b..(j + 1) * b];
                if coeff == 1 {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= s;
                    }
                } else {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= gf256::mul(coeff, *s);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reconstruct the original file from any `data_strips` coded strips.
    /// Exactly the first `data_strips` provided strips are used, in the order
    /// given.
    pub fn decode(&self, strips: &[(u32, &[u8])]) -> Result<Vec<u8>> {
        let k = self.data_strips as usize;
        if strips.len() < k {
            return Err(Error::InsufficientStrips {
                have: strips.len(),
                need: k,
            });
        }
        let mut seen = vec![false; self.total_strips as usize];
        for &(idx, data) in strips {
            if idx >= self.total_strips {
                return Err(Error::StripIndexOutOfRange {
                    index: idx,
                    total: self.total_strips,
                });
            }
            if data.len() != self.strip_bytes {
                return Err(Error::InvalidParameter(format!(
                    "strip {idx} has {} bytes, expected {}",
                    data.len(),
                    self.strip_bytes
                )));
            }
            if seen[idx as usize] {
                return Err(Error::DuplicateStrip(idx));
            }
            seen[idx as usize] = true;
        }
        let chosen = &strips[..k];
        let b = self.strip_bytes;
        let mut out = vec![0u8; self.data_len()];

        // systematic fast path: every chosen strip is a data strip
        if chosen.iter().all(|&(idx, _)| (idx as usize) < k) {
            for &(idx, data) in chosen {
                out[idx as usize * b..(idx as usize + 1) * b].copy_from_slice(data);
            }
            return Ok(out);
        }

        let indices: Vec<u32> = chosen.iter().map(|&(i, _)| i).collect();
        let sub = self.submatrix(&indices);
        let inv = gf256::invert_matrix(&sub, k)
            .expect("any data_strips rows of an MDS generator are invertible");
        for j in 0..k {
            let dst_range = j * b..(j + 1) * b;
            for (i, &(_, data)) in chosen.iter().enumerate() {
                let coeff = inv[j * k + i];
                if coeff == 0 {
                    continue;
                }
                let dst = &mut out[dst_range.clone()];
                if coeff == 1 {
                    for (d, s) in dst.iter_mut().zip(data.iter()) {
                        *d ^= s;
                    }
                } else {
                    for (d, s) in dst.iter_mut().zip(data.iter()) {
                        *d ^= gf256::mul(coeff, *s);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Split the coded file into chunks of `chunk_bytes` bytes. The chunk
    /// size must be a whole number of strips, and the strips-per-chunk count
    /// must divide both the total and data strip counts so the induced
    /// chunk-level code is itself MDS.
    pub fn chunk_ranges(&self, chunk_bytes: usize) -> Result<Vec<ChunkView>> {
        if chunk_bytes == 0 || !chunk_bytes.is_multiple_of(self.strip_bytes) {
            return Err(Error::Divisibility(format!(
                "chunk size {chunk_bytes} is not a multiple of the strip size {}",
                self.strip_bytes
            )));
        }
        let m = (chunk_bytes / self.strip_bytes) as u32;
        if !self.total_strips.is_multiple_of(m) {
            return Err(Error::Divisibility(format!(
                "strips per chunk {m} does not divide the total strip count {}",
                self.total_strips
            )));
        }
        if !self.data_strips.is_multiple_of(m) {
            return Err(Error::Divisibility(format!(
                "strips per chunk {m} does not divide the data strip count {}",
                self.data_strips
            )));
        }
        Ok((0..self.total_strips / m)
            .map(|index| ChunkView {
                index,
                strips_per_chunk: m,
                offset: index as usize * chunk_bytes,
                len: chunk_bytes,
            })
            .collect())
    }

    /// Reconstruct the original file from whole chunks; any `data/m` of the
    /// `total/m` chunks suffice.
    pub fn decode_chunks(&self, chunk_bytes: usize, chunks: &[(u32, &[u8])]) -> Result<Vec<u8>> {
        let views = self.chunk_ranges(chunk_bytes)?;
        let m = views[0].strips_per_chunk;
        let chunk_count = views.len() as u32;
        let mut strips = Vec::with_capacity(chunks.len() * m as usize);
        for &(idx, data) in chunks {
            if idx >= chunk_count {
                return Err(Error::StripIndexOutOfRange {
                    index: idx,
                    total: chunk_count,
                });
            }
            if data.len() != chunk_bytes {
                return Err(Error::InvalidParameter(format!(
                    "chunk {idx} has {} bytes, expected {chunk_bytes} (uniform chunk size required)",
                    data.len()
                )));
            }
            for s in 0..m {
                let lo = s as usize * self.strip_bytes;
                strips.push((idx * m + s, &data[lo..lo + self.strip_bytes]));
            }
        }
        if strips.len() < self.data_strips as usize {
            return Err(Error::InsufficientStrips {
                have: strips.len(),
                need: self.data_strips as usize,
            });
        }
        self.decode(&strips)
    }
}

/// Advance `selection` to the next k-combination of 0..total in
/// lexicographic order; false when exhausted.
fn next_combination(selection: &mut [u32], total: u32) -> bool {
    let k = selection.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if selection[i] < total - (k - i) as u32 {
            selection[i] += 1;
            for j in i + 1..k {
                selection[j] = selection[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
