//! Synthetic labeled corpora with known structure.

use rand::Rng;

/// Two planted identities with disjoint topical vocabularies (`a{j}` for
/// identity 0, `b{j}` for identity 1) plus shared ambiguous words `x{j}`.
/// Each token is uniform over the document identity's topical words and
/// the ambiguous words. Documents are labeled `c0` / `c1` by identity.
pub struct Planted {
    pub topical: usize,
    pub ambiguous: usize,
    pub doc_len: usize,
    pub ambiguous_rate: f64,
}

impl Default for Planted {
    fn default() -> Self {
        Self {
            topical: 200,
            ambiguous: 20,
            doc_len: 50,
            ambiguous_rate: 20.0 / 220.0,
        }
    }
}

impl Planted {
    /// One `label<TAB>text` line per document, plus each document's class.
    pub fn generate<R: Rng>(&self, rng: &mut R, docs: usize) -> (String, Vec<u32>) {
        let mut text = String::new();
        let mut classes = Vec::with_capacity(docs);
        for _ in 0..docs {
            let c: u32 = rng.gen_range(0..2);
            let prefix = if c == 0 { 'a' } else { 'b' };
            let tokens: Vec<String> = (0..self.doc_len)
                .map(|_| {
                    if rng.gen_bool(self.ambiguous_rate) {
                        format!("x{}", rng.gen_range(0..self.ambiguous))
                    } else {
                        format!("{prefix}{}", rng.gen_range(0..self.topical))
                    }
                })
                .collect();
            text.push_str(&format!("c{c}\t{}\n", tokens.join(" ")));
            classes.push(c);
        }
        (text, classes)
    }
}

/// Topic-mixture corpus: `topics` latent topics, each concentrated on its
/// own block of `words_per_topic` words; every class prefers its own group
/// of topics.
pub struct TopicMixture {
    pub classes: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub doc_len: usize,
    pub class_weight: f64,
    pub leak: f64,
}

impl Default for TopicMixture {
    fn default() -> Self {
        Self {
            classes: 5,
            topics: 20,
            words_per_topic: 100,
            doc_len: 50,
            class_weight: 0.35,
            leak: 0.2,
        }
    }
}

impl TopicMixture {
    pub fn generate<R: Rng>(&self, rng: &mut R, docs: usize) -> String {
        let per_class = self.topics / self.classes;
        let vocab = self.topics * self.words_per_topic;
        let mut text = String::new();
        for _ in 0..docs {
            let c = rng.gen_range(0..self.classes);
            let mut theta: Vec<f64> = (0..self.topics).map(|_| rng.gen::<f64>().powi(3)).collect();
            let total: f64 = theta.iter().sum();
            theta.iter_mut().for_each(|t| *t *= (1.0 - self.class_weight) / total);
            for t in &mut theta[c * per_class..(c + 1) * per_class] {
                *t += self.class_weight / per_class as f64;
            }
            let tokens: Vec<String> = (0..self.doc_len)
                .map(|_| {
                    let word = if rng.gen_bool(self.leak) {
                        rng.gen_range(0..vocab)
                    } else {
                        let mut u = rng.gen::<f64>();
                        let mut topic = self.topics - 1;
                        for (t, p) in theta.iter().enumerate() {
                            if u < *p {
                                topic = t;
                                break;
                            }
                            u -= p;
                        }
                        topic * self.words_per_topic + rng.gen_range(0..self.words_per_topic)
                    };
                    format!("w{word}")
                })
                .collect();
            text.push_str(&format!("class{c}\t{}\n", tokens.join(" ")));
        }
        text
    }
}
