//! Writes the synthetic toy corpus used by the tests: 10 documents of 70
//! sentences, 100 per rhetorical role. Each role draws from its own
//! vocabulary plus shared filler words, so hashed bag-of-words vectors are
//! (near) linearly separable.
//!
//! cargo run --example make_toy_corpus > tests/fixtures/toy_corpus.tsv

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rolelab::{Corpus, RhetoricalLabel};

const FILLER: &[&str] = &[
    "the", "of", "and", "in", "that", "to", "was", "by", "this", "on", "with", "as", "is", "it",
    "court", "case", "said", "which", "been", "has", "not", "be", "from", "at", "present",
    "matter", "also", "any", "such", "there", "their", "would", "under", "above",
];

fn vocabulary(label: RhetoricalLabel) -> &'static [&'static str] {
    match label {
        RhetoricalLabel::Facts => &[
            "appellant",
            "married",
            "deceased",
            "night",
            "village",
            "complaint",
            "FIR",
            "police",
            "station",
            "incident",
            "accompanied",
            "husband",
            "residing",
            "dowry",
            "lodged",
        ],
        RhetoricalLabel::RulingByLowerCourt => &[
            "Tribunal",
            "High",
            "learned",
            "Single",
            "Judge",
            "dismissed",
            "writ",
            "petition",
            "acquitted",
            "trial",
            "Sessions",
            "impugned",
            "Division",
            "Bench",
            "affirmed",
        ],
        RhetoricalLabel::Argument => &[
            "counsel",
            "submitted",
            "contended",
            "urged",
            "argued",
            "respondents",
            "behalf",
            "appearing",
            "contention",
            "Senior",
            "Advocate",
            "submission",
            "pointed",
            "canvassed",
            "emphasised",
        ],
        RhetoricalLabel::Statute => &[
            "Section",
            "Act",
            "provides",
            "sub-section",
            "clause",
            "Article",
            "Constitution",
            "enacted",
            "shall",
            "notwithstanding",
            "Code",
            "Rule",
            "prescribed",
            "hereinafter",
            "s.302",
        ],
        RhetoricalLabel::Precedent => &[
            "reported",
            "SCC",
            "AIR",
            "observed",
            "judgment",
            "decision",
            "relied",
            "reiterated",
            "ratio",
            "Vs.",
            "laid",
            "down",
            "followed",
            "Constitution-Bench",
            "overruled",
        ],
        RhetoricalLabel::RatioOfTheDecision => &[
            "therefore",
            "hold",
            "view",
            "considered",
            "opinion",
            "accordingly",
            "satisfied",
            "evidence",
            "unable",
            "agree",
            "principle",
            "circumstances",
            "clearly",
            "established",
            "reasoning",
        ],
        RhetoricalLabel::RulingByPresentCourt => &[
            "appeal",
            "allowed",
            "set",
            "aside",
            "costs",
            "disposed",
            "quashed",
            "restored",
            "directed",
            "released",
            "forthwith",
            "order",
            "stands",
            "modified",
            "hereby",
        ],
    }
}

fn sentence(label: RhetoricalLabel, rng: &mut ChaCha8Rng) -> String {
    let vocab = vocabulary(label);
    let n_class = rng.gen_range(3..=5);
    let n_fill = rng.gen_range(3..=7);
    let mut words: Vec<&str> = vocab.choose_multiple(rng, n_class).copied().collect();
    words.extend(FILLER.choose_multiple(rng, n_fill));
    words.shuffle(rng);
    let mut s = words.join(" ");
    if let Some(first) = s.get(0..1) {
        s.replace_range(0..1, &first.to_uppercase());
    }
    s.push('.');
    s
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut corpus = Corpus::default();
    for doc in 0..10 {
        let sentences: Vec<(String, RhetoricalLabel)> = RhetoricalLabel::ALL
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l, 10))
            .map(|l| (sentence(l, &mut rng), l))
            .collect();
        corpus
            .push_document(&format!("toy-{doc:02}"), sentences)
            .expect("generated sentences are well formed");
    }
    print!("{}", corpus.to_tsv());
}
