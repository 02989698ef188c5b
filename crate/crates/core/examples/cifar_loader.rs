//! Reads CIFAR binaries. With a directory argument it loads the real
//! CIFAR-10 set; without one it writes and reads back a two-record fixture.
//!
//! `cargo run --release --example cifar_loader -- /data/cifar-10-batches-bin`

use bpt::data::{cifar10_record, load_cifar10, CIFAR_PIXELS};

fn main() -> bpt::Result<()> {
    let dir = match std::env::args().nth(1) {
        Some(d) => d.into(),
        None => {
            let dir = std::env::temp_dir().join("bpt_cifar_fixture");
            std::fs::create_dir_all(&dir)?;
            let mut bytes = cifar10_record(3, &vec![200; CIFAR_PIXELS])?;
            let gradient: Vec<u8> = (0..CIFAR_PIXELS).map(|i| (i % 256) as u8).collect();
            bytes.extend(cifar10_record(8, &gradient)?);
            std::fs::write(dir.join("data_batch_1.bin"), bytes)?;
            dir
        }
    };
    let data = load_cifar10(&dir)?;
    println!("{}: {} training images", data.train.provenance(), data.train.len());
    println!("class counts {:?}", data.train.class_counts());
    if let Some(test) = &data.test {
        println!("test split: {} images", test.len());
    }
    let first = &data.train.images().expect("images")[0];
    println!(
        "first image {}x{}x{}, top-left red {:.3}",
        first.width(),
        first.height(),
        first.channels(),
        first.get(0, 0, 0)
    );
    Ok(())
}
