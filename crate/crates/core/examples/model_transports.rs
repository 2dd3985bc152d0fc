// The same toy model reached in-process and over HTTP gives identical
// risk outputs.

use std::time::Duration;

use nall::model::{risk_correlation, ModelHandle, ToyHttpServer, ToyLmpiModelSpec, ToySite};
use nall::volume::VolumeGrid;

/// Raise the 3x3x3 block around `c` above the detection threshold.
fn fill_block(scan: &mut VolumeGrid, c: [usize; 3]) {
    for i in c[0] - 1..=c[0] + 1 {
        for j in c[1] - 1..=c[1] + 1 {
            for k in c[2] - 1..=c[2] + 1 {
                scan.set([i, j, k], 60.0);
            }
        }
    }
}

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let sites = vec![
        ToySite { center: [3, 3, 3], radius_mm: 1.5 },
        ToySite { center: [9, 6, 4], radius_mm: 1.5 },
    ];
    let spec = ToyLmpiModelSpec::additive(sites, -1.0, vec![0.7, 1.4]);
    let server = ToyHttpServer::bind(spec.clone(), "127.0.0.1:0")?;
    let endpoint = format!("http://{}", server.local_addr()?);
    server.spawn();
    let local = ModelHandle::toy(spec)?;
    let remote = ModelHandle::http(&endpoint, Duration::from_secs(10));
    let mut outputs = Vec::new();
    let mut out = String::new();
    for pattern in 0..4u32 {
        let mut scan = VolumeGrid::filled([12, 8, 8], [1.0; 3], -800.0)?;
        for (bit, c) in [(1, [3, 3, 3]), (2, [9, 6, 4])] {
            if pattern & bit != 0 {
                fill_block(&mut scan, c);
            }
        }
        let a = local.query_risk(&scan)?;
        let b = remote.query_risk(&scan)?;
        if a != b {
            return Err(format!("transports disagree on pattern {pattern}: {a:?} vs {b:?}").into());
        }
        out += &format!("pattern {pattern:02b}: logit {:+.3}, y0 {:.4}, y6 {:.4}\n", a.base_logit, a.risks[0], a.risks[6]);
        outputs.push(a);
    }
    let corr = risk_correlation(&outputs)?;
    out += &format!("corr(y0, y6) = {:.6}\n", corr[0][6]);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
