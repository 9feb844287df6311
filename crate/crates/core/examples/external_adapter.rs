//! Drives a model through the subprocess protocol. The "model" here is a
//! shell one-liner; any program that reads `{input}` and writes `{output}`
//! works the same way.

use stainshift::adapters::{Adapter, AdapterKind, AdapterSpec, SectionMeta};
use stainshift::raster::ImageGray;
use stainshift::Error;

fn main() -> stainshift::Result<()> {
    let img = ImageGray::from_fn(32, 16, |x, _| (x * 8) as u8);
    let meta = SectionMeta { id: "demo".into(), seed: 42, ..Default::default() };

    // echoes the input: a grey PNG read back as RGB
    let echo = Adapter::External(AdapterSpec::new(AdapterKind::DomainTransfer, &["cp", "{input}", "{output}"], 30.0));
    let rgb = echo.run_domain_transfer(&img, &meta)?;
    println!("echo adapter returned {:?} rgb", rgb.dims());

    let failing = Adapter::External(AdapterSpec::new(
        AdapterKind::DomainTransfer,
        &["sh", "-c", "echo \"model crashed (seed $STAINSHIFT_SEED)\" >&2; exit 1", "{input}", "{output}"],
        30.0,
    ));
    match failing.run_domain_transfer(&img, &meta) {
        Err(Error::AdapterFailed { status, stderr }) => println!("failing adapter: {status}: {stderr}"),
        other => println!("unexpected: {other:?}"),
    }

    let slow = Adapter::External(AdapterSpec::new(AdapterKind::DomainTransfer, &["sh", "-c", "sleep 5", "{input}", "{output}"], 0.2));
    match slow.run_domain_transfer(&img, &meta) {
        Err(Error::AdapterTimeout(t)) => println!("slow adapter killed after {t:?}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
