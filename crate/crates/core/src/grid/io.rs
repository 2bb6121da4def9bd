//! Binary P-SOG file format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic   "PSOG" (4 bytes)
//! version u32
//! n_l n_w n_h          u32 x3
//! res_l res_w res_h    f64 x3
//! origin               f64 x3
//! M                    u16
//! empty_class          u16
//! T                    u64
//! counts               N*M u32, voxel-major (i_l fastest), class-minor
//! names                u32 byte length + UTF-8 block, class names '\n'-joined
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{ClassTable, PSog, RoiGrid, VoxelId};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PSOG";
const VERSION: u32 = 1;

/// Writes the accumulator to `path` atomically (write-then-rename).
pub fn save_psog(psog: &PSog, path: &Path) -> Result<()> {
    let tmp = path.with_extension("psog.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_psog(psog, &mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_psog<W: Write>(psog: &PSog, w: &mut W) -> Result<()> {
    let grid = psog.grid();
    let n = grid.counts();
    let res = grid.resolution();
    let origin = grid.origin();
    let m = psog.classes().len();

    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for c in n {
        w.write_u32::<LittleEndian>(c as u32)?;
    }
    for r in res {
        w.write_f64::<LittleEndian>(r)?;
    }
    for o in origin {
        w.write_f64::<LittleEndian>(o)?;
    }
    w.write_u16::<LittleEndian>(m as u16)?;
    w.write_u16::<LittleEndian>(psog.classes().empty_class())?;
    w.write_u64::<LittleEndian>(psog.frames_seen())?;
    for v in 0..grid.n_voxels() {
        for c in 0..m {
            w.write_u32::<LittleEndian>(psog.count(v as VoxelId, c as u16))?;
        }
    }
    let names = psog.classes().names().join("\n");
    w.write_u32::<LittleEndian>(names.len() as u32)?;
    w.write_all(names.as_bytes())?;
    Ok(())
}

/// Reads a P-SOG file written by [`save_psog`].
pub fn load_psog(path: &Path) -> Result<PSog> {
    let mut r = BufReader::new(File::open(path)?);
    read_psog(&mut r).map_err(|e| match e {
        Error::Io(io) => Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("truncated or unreadable P-SOG file: {io}"),
        },
        other => other,
    })
}

fn read_psog<R: Read>(r: &mut R) -> Result<PSog> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a P-SOG file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Config(format!("unsupported P-SOG version {version}")));
    }
    let mut n = [0usize; 3];
    for c in &mut n {
        *c = r.read_u32::<LittleEndian>()? as usize;
    }
    let mut res = [0.0f64; 3];
    for x in &mut res {
        *x = r.read_f64::<LittleEndian>()?;
    }
    let mut origin = [0.0f64; 3];
    for x in &mut origin {
        *x = r.read_f64::<LittleEndian>()?;
    }
    let m = r.read_u16::<LittleEndian>()? as usize;
    let empty_class = r.read_u16::<LittleEndian>()?;
    let t = r.read_u64::<LittleEndian>()?;

    let grid = RoiGrid::new(n, res, origin)?;
    let n_voxels = grid.n_voxels();
    let mut counts = vec![0u32; n_voxels * m];
    for slot in counts.iter_mut() {
        *slot = r.read_u32::<LittleEndian>()?;
    }
    let name_len = r.read_u32::<LittleEndian>()? as usize;
    let mut name_buf = vec![0u8; name_len];
    r.read_exact(&mut name_buf)?;
    let names_block = String::from_utf8(name_buf)
        .map_err(|_| Error::Config("class name block is not valid UTF-8".into()))?;
    let names: Vec<String> = names_block.split('\n').map(str::to_owned).collect();
    if names.len() != m {
        return Err(Error::Config(format!(
            "class name block has {} entries, header says {}",
            names.len(),
            m
        )));
    }
    let classes = ClassTable::new(names, empty_class)?;

    let mut psog = PSog::new(grid, classes);
    psog.set_frames_seen(t);
    for v in 0..n_voxels {
        for c in 0..m {
            let value = counts[v * m + c];
            if value != 0 {
                psog.set_count_unchecked(v as VoxelId, c as u16, value);
            }
        }
    }
    Ok(psog)
}
