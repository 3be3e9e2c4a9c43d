//! Raw frame tensor file: a two-line text header
//!
//! ```text
//! FSEQ 1
//! frames=<F> height=<H> width=<W> fps=<f_r> dtype=f32
//! ```
//!
//! followed by little-endian 32-bit floats, frame-major, row-major within
//! frames. Write-then-read round-trips the payload bit-exactly.

use super::IoError;
use crate::synth::FrameSequence;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_fseq(path: &Path, seq: &FrameSequence) -> Result<(), IoError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write!(
        out,
        "FSEQ 1\nframes={} height={} width={} fps={} dtype=f32\n",
        seq.frame_count(),
        seq.height(),
        seq.width(),
        seq.frame_rate_hz()
    )?;
    for &v in seq.data() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_fseq(path: &Path) -> Result<FrameSequence, IoError> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let magic = read_line(&mut reader, path)?;
    if magic != "FSEQ 1" {
        return Err(IoError::format(path, format!("bad magic {magic:?}")));
    }
    let header = read_line(&mut reader, path)?;
    let mut frames = None;
    let mut height = None;
    let mut width = None;
    let mut fps = None;
    let mut dtype = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| IoError::format(path, format!("bad header field {field:?}")))?;
        match key {
            "frames" => frames = value.parse::<usize>().ok(),
            "height" => height = value.parse::<usize>().ok(),
            "width" => width = value.parse::<usize>().ok(),
            "fps" => fps = value.parse::<f64>().ok(),
            "dtype" => dtype = Some(value.to_string()),
            _ => return Err(IoError::format(path, format!("unknown header key {key:?}"))),
        }
    }
    let (frames, height, width, fps) = match (frames, height, width, fps) {
        (Some(f), Some(h), Some(w), Some(r)) => (f, h, w, r),
        _ => return Err(IoError::format(path, "incomplete header")),
    };
    if dtype.as_deref() != Some("f32") {
        return Err(IoError::format(
            path,
            format!("unsupported dtype {dtype:?}"),
        ));
    }

    let count = frames
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .ok_or_else(|| IoError::format(path, "header dimensions overflow"))?;
    let mut payload = vec![0u8; count * 4];
    reader.read_exact(&mut payload).map_err(|e| {
        IoError::format(
            path,
            format!("payload shorter than {count} f32 values: {e}"),
        )
    })?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(IoError::format(path, "trailing bytes after payload"));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    FrameSequence::new(frames, height, width, fps, data)
        .map_err(|e| IoError::format(path, e.to_string()))
}

fn read_line<R: Read>(reader: &mut R, path: &Path) -> Result<String, IoError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte)?;
        if n == 0 {
            return Err(IoError::format(path, "unexpected end of header"));
        }
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(IoError::format(path, "header line too long"));
        }
    }
    String::from_utf8(line).map_err(|_| IoError::format(path, "header is not UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_round_trips_bit_exactly() {
        let data: Vec<f64> = (0..2 * 3 * 4)
            .map(|i| (f32::from_bits(0x3f00_0000 + i as u32 * 1000)) as f64)
            .collect();
        let seq = FrameSequence::new(2, 3, 4, 25.0, data).unwrap();
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.fseq");
        write_fseq(&path, &seq).unwrap();
        let back = read_fseq(&path).unwrap();
        assert_eq!(back, seq);
        // file bytes are reproduced exactly by a second write
        let bytes_a = std::fs::read(&path).unwrap();
        write_fseq(&path, &back).unwrap();
        let bytes_b = std::fs::read(&path).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn header_validation() {
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.fseq");
        std::fs::write(&path, b"NOPE 1\n").unwrap();
        assert!(matches!(read_fseq(&path), Err(IoError::Format { .. })));
        std::fs::write(
            &path,
            b"FSEQ 1\nframes=2 height=1 width=1 fps=25 dtype=f64\n",
        )
        .unwrap();
        assert!(matches!(read_fseq(&path), Err(IoError::Format { .. })));
        // truncated payload
        let mut bytes = b"FSEQ 1\nframes=2 height=1 width=1 fps=25 dtype=f32\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_fseq(&path), Err(IoError::Format { .. })));
    }
}
