//! Tiny fork-join helper: map a function over inputs on scoped threads and
//! return the outputs in input order, so parallel runs aggregate exactly
//! like sequential ones.

pub fn indexed_map<I, O, F>(inputs: Vec<I>, f: F) -> Vec<O>
where
    I: Send + Sync,
    O: Send,
    F: Fn(&I) -> O + Sync,
{
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(inputs.len().max(1));
    if workers <= 1 || inputs.len() <= 1 {
        return inputs.iter().map(&f).collect();
    }
    let chunk = inputs.len().div_ceil(workers);
    let mut out: Vec<Vec<O>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for slice in inputs.chunks(chunk) {
            let f = &f;
            handles.push(scope.spawn(move || slice.iter().map(f).collect::<Vec<O>>()));
        }
        for h in handles {
            out.push(h.join().expect("worker panicked"));
        }
    });
    out.into_iter().flatten().collect()
}
