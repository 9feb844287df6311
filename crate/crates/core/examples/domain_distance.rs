//! k-NN KL divergence between raw-modality, domain-transferred and paired
//! H&E image embeddings.

use stainshift::adapters::Adapter;
use stainshift::pipeline::{evaluate_domain_distance, validate_manifest, Config};
use stainshift::synth;

fn main() -> stainshift::Result<()> {
    let data = tempfile::tempdir().map_err(|e| stainshift::Error::io(std::env::temp_dir(), e))?;
    let manifest = validate_manifest(synth::write_domain_fixture(data.path(), 40, 32, 1)?)?;
    let config = Config::default();

    for (name, dt) in [("pseudo-stain", Adapter::PseudoStain), ("paired H&E (identity)", Adapter::PairedHe)] {
        let r = evaluate_domain_distance(&manifest, &Adapter::Histogram, Some(&dt), &config)?;
        println!(
            "{name:<22} KL(raw||he) {:8.4}  KL(transferred||he) {:8.4}",
            r.kl_raw_he,
            r.kl_transferred_he.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
