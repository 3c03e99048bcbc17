//! Evaluation protocols spread over scoped threads.

use sre_core::data::Split;
use sre_core::eval::{evaluate, protocol_transforms, Protocol, ProtocolResult};
use sre_core::{Network, Scalar};

use crate::Result;

pub const THREADS_VAR: &str = "SRE_THREADS";

/// Worker count from `SRE_THREADS`; 1 when unset or invalid.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Same result as the sequential protocol for any thread count: every copy
/// is scored independently and results are merged in transform order.
pub fn run_protocol_parallel<T: Scalar>(
    net: &Network<T>,
    split: &Split,
    protocol: Protocol,
    threads: usize,
) -> Result<ProtocolResult> {
    let transforms = protocol_transforms(protocol, split.dims)?;
    let original = evaluate(net, split, None)?;
    let threads = threads.clamp(1, transforms.len().max(1));
    let chunk = transforms.len().div_ceil(threads).max(1);
    let accuracies = if threads == 1 {
        transforms
            .iter()
            .map(|t| evaluate(net, split, Some(t)))
            .collect::<sre_core::Result<Vec<_>>>()?
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = transforms
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|t| evaluate(net, split, Some(t))).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("protocol worker panicked"))
                .collect::<sre_core::Result<Vec<_>>>()
        })?
    };
    Ok(ProtocolResult::new(protocol, transforms, accuracies, original))
}
