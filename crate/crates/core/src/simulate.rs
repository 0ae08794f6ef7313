//! Replicated simulations split into fixed-size chunks, each drawing from its
//! own stream `(seed, label, chunk)`. Results do not depend on the number of
//! worker threads.

use std::thread;

use crate::distribution::DistributionModel;
use crate::error::{Error, Result};
use crate::records::{
    sample_records_gamma, sample_records_stream, stream_until_records, ConditionalLaw,
    ConditioningContext,
};
use crate::rng::{stream_rng, RandomStream};

/// Replicates per random stream.
pub const CHUNK: usize = 4096;

fn workers() -> usize {
    thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(16)
}

/// Runs `task(rng, replicate)` for every replicate and returns the results in
/// replicate order.
pub fn replicate<T, F>(seed: u64, label: &str, count: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream, usize) -> Result<T> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let run_chunk = |c: usize| -> Result<Vec<T>> {
        let mut rng = stream_rng(seed, label, c as u64);
        let end = ((c + 1) * CHUNK).min(count);
        (c * CHUNK..end).map(|i| task(&mut rng, i)).collect()
    };
    let per_worker = chunks.div_ceil(workers()).max(1);
    let parts: Vec<Result<Vec<Vec<T>>>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..chunks)
            .step_by(per_worker)
            .map(|first| {
                let run_chunk = &run_chunk;
                scope.spawn(move || {
                    (first..(first + per_worker).min(chunks))
                        .map(run_chunk)
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(count);
    for part in parts {
        for chunk in part? {
            out.extend(chunk);
        }
    }
    Ok(out)
}

/// `count` exact draws of `X(n)` given the context.
pub fn conditional_draws(
    d: &DistributionModel,
    ctx: &ConditioningContext,
    seed: u64,
    count: usize,
) -> Result<Vec<f64>> {
    let law = ConditionalLaw::new(d, ctx)?;
    replicate(seed, "simulate/conditional", count, |rng, _| {
        law.sample(rng)
    })
}

/// `(X(1), ..., X(n))` by the hazard transform, once per replicate.
pub fn gamma_sequences(
    d: &DistributionModel,
    n: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    replicate(seed, "simulate/records", count, |rng, _| {
        Ok(sample_records_gamma(d, rng, n)?.into_vec())
    })
}

/// Number of records and the last record among `horizon` i.i.d. draws, once
/// per replicate.
pub fn stream_counts(
    d: &DistributionModel,
    horizon: u64,
    seed: u64,
    count: usize,
) -> Result<Vec<(usize, f64)>> {
    replicate(seed, "simulate/stream", count, |rng, _| {
        let seq = sample_records_stream(d, rng, horizon)?;
        let last = *seq.values().last().expect("the first draw is a record");
        Ok((seq.len(), last))
    })
}

/// `X(2)` by both samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondRecordSamples {
    pub gamma: Vec<f64>,
    pub stream: Vec<f64>,
    /// Stream replicates that saw a single record within the horizon.
    pub exhausted: usize,
}

pub fn second_record_samples(
    d: &DistributionModel,
    seed: u64,
    count: usize,
    horizon: u64,
) -> Result<SecondRecordSamples> {
    let gamma = replicate(seed, "simulate/x2-gamma", count, |rng, _| {
        Ok(sample_records_gamma(d, rng, 2)?.values()[1])
    })?;
    let outcomes = replicate(
        seed,
        "simulate/x2-stream",
        count,
        |rng, _| match stream_until_records(d, rng, 2, horizon) {
            Ok(seq) => Ok(Some(seq.values()[1])),
            Err(Error::HorizonExhausted { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    )?;
    let exhausted = outcomes.iter().filter(|x| x.is_none()).count();
    Ok(SecondRecordSamples {
        gamma,
        stream: outcomes.into_iter().flatten().collect(),
        exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replicates_are_ordered_and_reproducible() {
        let a = replicate(1, "t", 10_000, |rng, i| Ok((i, rng.random::<u32>()))).unwrap();
        assert!(a.iter().enumerate().all(|(i, x)| x.0 == i));
        let b = replicate(1, "t", 10_000, |rng, i| Ok((i, rng.random::<u32>()))).unwrap();
        assert_eq!(a, b);
        let c = replicate(2, "t", 10, |rng, _| Ok(rng.random::<u32>())).unwrap();
        assert_ne!(a[..10].iter().map(|x| x.1).collect::<Vec<_>>(), c);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<()>> = replicate(1, "t", 5000, |_, i| {
            if i == 4500 {
                Err(Error::ParamError("boom".into()))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
        assert!(replicate(1, "t", 0, |_, _| Ok(())).unwrap().is_empty());
    }

    #[test]
    fn conditional_draws_stay_inside() {
        let d = DistributionModel::shifted_exponential(1.0, 0.0).unwrap();
        let ctx = ConditioningContext::minimal(2, 3, 1.0, 5.0).unwrap();
        let xs = conditional_draws(&d, &ctx, 3, 1000).unwrap();
        assert_eq!(xs.len(), 1000);
        assert!(xs.iter().all(|&x| 1.0 < x && x < 5.0));
    }
}
