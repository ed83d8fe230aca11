//! Writes a small random model (`.bin` and `.gguf`) plus a matching
//! tokenizer into a directory, for trying the CLI without downloads.
//!
//! cargo run -p llamabench --example synthetic -- out/

use std::path::PathBuf;

use llamabench::fixtures::{ascii_tokenizer, random_model, tiny_config};
use llamabench::model_io::{write_checkpoint, write_gguf, write_tokenizer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    std::fs::create_dir_all(&dir)?;
    let model = random_model(tiny_config(256), 42, 0.5);
    write_checkpoint(&model, dir.join("synthetic.bin"))?;
    write_gguf(&model, dir.join("synthetic.gguf"))?;
    write_tokenizer(&ascii_tokenizer(), dir.join("tokenizer.bin"))?;
    println!(
        "wrote synthetic.bin, synthetic.gguf and tokenizer.bin to {}",
        dir.display()
    );
    Ok(())
}
