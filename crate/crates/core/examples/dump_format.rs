//! Writes a tiny attention dump, reads it back, and walks its records.
//!
//!     cargo run --example dump_format

use spectral_attn::data_io::{decode_dump, encode_dump, AttentionDump, DumpShape};

fn main() -> spectral_attn::Result<()> {
    let shape = DumpShape {
        context_len: 3,
        gen_len: 2,
        layers: 1,
        heads: 2,
    };
    // step i holds L*H rows of length context_len + i - 1
    let steps = vec![
        vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8],
        vec![0.4, 0.3, 0.2, 0.1, 0.25, 0.25, 0.25, 0.25],
    ];
    let dump = AttentionDump { shape, steps };
    let bytes = encode_dump(&dump);
    println!("{} bytes (expected {})", bytes.len(), shape.file_size());

    let back = decode_dump(&bytes, "in-memory")?;
    assert_eq!(back, dump);
    for rec in back.records("demo") {
        for head in 1..=rec.heads {
            println!("step {} head {}: {:?}", rec.step_index, head, rec.row(1, head));
        }
    }
    Ok(())
}
