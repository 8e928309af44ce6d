//! Shared inputs for the benchmarks.

use sdgscope_cli::synth::{generate, glossary_csv, SynthOptions};
use sdgscope_core::sdg::{classify_set, read_glossary, ClassifyOptions, SdgAssignment};
use sdgscope_core::{Corpus, PubIdSet};

pub struct Fixture {
    pub corpus: Corpus,
    pub set: PubIdSet,
    pub assignments: Vec<SdgAssignment>,
}

pub fn fixture(records: usize) -> Fixture {
    let corpus = generate(SynthOptions { records, seed: 42 });
    let set = corpus.all();
    let glossary = read_glossary(glossary_csv().as_bytes()).expect("bundled glossary parses");
    let assignments = classify_set(&set, &corpus, &glossary, ClassifyOptions::default());
    Fixture {
        corpus,
        set,
        assignments,
    }
}
