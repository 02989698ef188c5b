//! The two image descriptors: a K-means patch codebook with quadrant pooling
//! (classifier features) and HOG (teacher features).

use bpt::data::{synth_images, SynthImageConfig};
use bpt::features::{encode, hog, Codebook, CodebookConfig, HogConfig};

fn main() -> bpt::Result<()> {
    let ds = synth_images(&SynthImageConfig { n_classes: 4, per_class: 50, side: 32, ..Default::default() })?;
    let imgs = ds.images().expect("images");
    let book = Codebook::fit(imgs, &CodebookConfig { k: 32, samples: 10_000, whiten: true, ..Default::default() })?;
    println!("codebook: {} centroids over {}x{} patches, whitened {}", book.k(), book.patch_size(), book.patch_size(), book.is_whitened());
    let bytes = book.to_bytes()?;
    println!("serialized codebook: {} bytes", bytes.len());

    let labels = ds.labels().expect("labels");
    for c in 0..4 {
        let img = &imgs[labels.iter().position(|l| *l == c).expect("class present")];
        let f = encode(img, &book)?;
        let h = hog(img, &HogConfig::default())?;
        let active = f.iter().filter(|v| **v > 0.0).count();
        println!("class {c}: {} pooled features ({active} nonzero), {} HOG values", f.len(), h.len());
    }
    Ok(())
}
