use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use titlerank_core::retrieval::{
    bm25_search, build_bm25_index, tokenize, Bm25Index, Corpus, Document, IndexField,
};

const WORDS: &[&str] = &[
    "hill", "street", "blues", "benny", "goodman", "river", "north", "south", "king", "queen",
    "film", "song", "album", "band", "city", "war", "the", "of", "red", "blue",
];

fn random_corpus(seed: u64, n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n)
        .map(|i| {
            let mut words = |lo: usize, hi: usize| {
                let len = rng.random_range(lo..=hi);
                (0..len)
                    .map(|_| *WORDS.choose(&mut rng).unwrap())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            Document {
                doc_id: format!("d{i:03}"),
                title: words(1, 4),
                text: words(0, 12),
            }
        })
        .collect();
    Corpus::new(docs).unwrap()
}

/// Scores every document directly from the token lists, with no index.
fn brute_force(corpus: &Corpus, field: IndexField, query: &str) -> Vec<(String, f64)> {
    let (k1, b) = (1.2, 0.75);
    let texts: Vec<Vec<String>> = corpus
        .docs()
        .iter()
        .map(|d| match field {
            IndexField::Title => tokenize(&d.title),
            IndexField::TitlePlusText => tokenize(&format!("{} {}", d.title, d.text)),
        })
        .collect();
    let n = texts.len() as f64;
    let avg = texts.iter().map(|t| t.len() as f64).sum::<f64>() / n;
    let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
    let mut out = Vec::new();
    for (doc, toks) in corpus.docs().iter().zip(&texts) {
        let mut score = 0.0;
        let mut matched = false;
        for term in &terms {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let df = texts.iter().filter(|t| t.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = 1.0 - b + b * toks.len() as f64 / avg;
            score += idf * (tf * (k1 + 1.0) / (tf + k1 * norm));
        }
        if matched {
            out.push((doc.doc_id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

#[test]
fn search_matches_exhaustive_scorer_exactly() {
    let corpus = random_corpus(7, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for field in [IndexField::Title, IndexField::TitlePlusText] {
        let index = build_bm25_index(&corpus, field).unwrap();
        for _ in 0..40 {
            let len = rng.random_range(1..=5);
            let query: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            let query = query.join(" ");
            let expected = brute_force(&corpus, field, &query);
            let got = bm25_search(&index, &query, 50).unwrap();
            assert_eq!(got.len(), expected.len(), "{query}");
            for (g, (id, score)) in got.iter().zip(&expected) {
                assert_eq!(&g.doc_id, id, "{query}");
                assert_eq!(g.first_stage_score, *score, "{query}");
            }
            let top3 = bm25_search(&index, &query, 3).unwrap();
            assert_eq!(top3[..], got[..top3.len()]);
        }
    }
}

#[test]
fn single_doc_score_matches_hand_value() {
    let corpus = Corpus::new(vec![Document {
        doc_id: "h".into(),
        title: "hill".into(),
        text: String::new(),
    }])
    .unwrap();
    let index = build_bm25_index(&corpus, IndexField::Title).unwrap();
    let hits = bm25_search(&index, "hill", 1).unwrap();
    assert!((hits[0].first_stage_score - 0.2876821).abs() <= 1e-6);
}

#[test]
fn common_entity_words_bury_the_gold_title() {
    let titles = [
        ("gold", "The Who"),
        ("d1", "Who Sang the Song"),
        ("d2", "The Song of the Generation"),
        ("d3", "My Generation Song"),
        ("d4", "Who Is the Singer"),
        ("d5", "River Valley"),
        ("d6", "Northern Lights"),
    ];
    let corpus = Corpus::new(
        titles
            .iter()
            .map(|(id, t)| Document {
                doc_id: id.to_string(),
                title: t.to_string(),
                text: String::new(),
            })
            .collect(),
    )
    .unwrap();
    let index = build_bm25_index(&corpus, IndexField::Title).unwrap();
    let hits = bm25_search(&index, "who sang the song my generation", 10).unwrap();
    let gold_rank = hits.iter().position(|c| c.doc_id == "gold").unwrap();
    assert!(gold_rank >= 2, "gold ranked {gold_rank}");
}

#[test]
fn persisted_index_reproduces_search() {
    let corpus = random_corpus(3, 50);
    let index = build_bm25_index(&corpus, IndexField::TitlePlusText).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.bin");
    index.save(&path).unwrap();
    let loaded = Bm25Index::load(&path).unwrap();
    assert_eq!(loaded, index);
    for q in ["hill street", "the king of the north", "red"] {
        assert_eq!(
            bm25_search(&loaded, q, 10).unwrap(),
            bm25_search(&index, q, 10).unwrap()
        );
    }
    let rebuilt = build_bm25_index(&corpus, IndexField::TitlePlusText).unwrap();
    assert_eq!(rebuilt.to_bytes(), std::fs::read(&path).unwrap());

    let mut bytes = index.to_bytes();
    bytes[0] = b'X';
    assert!(Bm25Index::from_bytes(&bytes).is_err());
    let bytes = index.to_bytes();
    assert!(Bm25Index::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn scores_nonnegative_and_monotone_in_tf() {
    let corpus = random_corpus(21, 50);
    let index = build_bm25_index(&corpus, IndexField::TitlePlusText).unwrap();
    for w in WORDS {
        for c in bm25_search(&index, w, 50).unwrap() {
            assert!(c.first_stage_score >= 0.0);
        }
    }
    for len in [1, 5, 20] {
        let mut prev = 0.0;
        for tf in 1..10 {
            let w = index.tf_weight(tf, len);
            assert!(w > prev);
            prev = w;
        }
    }
}
