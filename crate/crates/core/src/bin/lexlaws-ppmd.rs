//! Reference PPMd compressor for encoding-rate measurements.
//!
//! `lexlaws-ppmd INPUT OUTPUT` writes a raw PPMd (variant H) stream with
//! model order 6 and 16 MiB of model memory. `--version` prints the pinned
//! configuration, which is recorded as the compressor id.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::process::ExitCode;

use ppmd_rust::Ppmd7Encoder;

const ORDER: u32 = 6;
const MEMORY: u32 = 16 << 20;

fn compress(input: &str, output: &str) -> std::io::Result<()> {
    let mut data = Vec::new();
    BufReader::new(File::open(input)?).read_to_end(&mut data)?;
    let out = BufWriter::new(File::create(output)?);
    let mut enc = Ppmd7Encoder::new(out, ORDER, MEMORY).map_err(std::io::Error::other)?;
    enc.write_all(&data)?;
    enc.finish(false)?.flush()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [flag] if flag == "--version" => {
            println!("lexlaws-ppmd {} ppmd7 order={ORDER} mem={}MiB", env!("CARGO_PKG_VERSION"), MEMORY >> 20);
            ExitCode::SUCCESS
        }
        [input, output] => match compress(input, output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("lexlaws-ppmd: {e}");
                ExitCode::FAILURE
            }
        },
        _ => {
            eprintln!("usage: lexlaws-ppmd INPUT OUTPUT | --version");
            ExitCode::from(2)
        }
    }
}
