//! Seeded synthetic fixtures: a crawled-website corpus with descriptions,
//! annotations and ratings, plus small planted-signal datasets for each
//! learner.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::corpus::{DescriptionRecord, Document, PageRecord, PageType};
use crate::error::{Error, Result};
use crate::evalmetrics::RatingRecord;
use crate::rnn::LabeledDocument;
use crate::textproc::{tokenize, EmbeddingTable};
use crate::weaklabel::{AnnotationRecord, Criterion};

/// Annotated sentence counts per criterion for a 300-project corpus.
pub const ANNOTATION_QUOTAS: [(Criterion, usize); 5] = [
    (Criterion::Objectives, 374),
    (Criterion::Actors, 217),
    (Criterion::Outputs, 309),
    (Criterion::Innovativeness, 256),
    (Criterion::None, 3167),
];

struct Topic {
    keywords: &'static [&'static str],
    beneficiaries: &'static [&'static str],
    outputs: &'static [&'static str],
}

const TOPICS: &[Topic] = &[
    Topic {
        keywords: &[
            "health",
            "healthcare",
            "patients",
            "mental health",
            "nutrition",
            "clinic",
            "wellbeing",
        ],
        beneficiaries: &["patients", "carers", "nurses", "older adults"],
        outputs: &["screening kit", "care network", "health hub"],
    },
    Topic {
        keywords: &[
            "food",
            "farming",
            "farmers",
            "food waste",
            "organic",
            "crops",
            "soil",
        ],
        beneficiaries: &["farmers", "families", "growers", "food banks"],
        outputs: &["seed library", "market stall network", "composting scheme"],
    },
    Topic {
        keywords: &[
            "energy",
            "solar",
            "renewable",
            "heating",
            "fuel poverty",
            "electricity",
            "efficiency",
        ],
        beneficiaries: &["households", "tenants", "schools", "villages"],
        outputs: &["solar cooperative", "insulation programme", "microgrid"],
    },
    Topic {
        keywords: &[
            "mobility",
            "cycling",
            "bicycles",
            "public transport",
            "traffic",
            "commuting",
            "transport",
        ],
        beneficiaries: &["commuters", "cyclists", "pupils", "workers"],
        outputs: &[
            "bike sharing scheme",
            "ride pooling service",
            "cargo bike fleet",
        ],
    },
    Topic {
        keywords: &[
            "recycling",
            "biodiversity",
            "pollution",
            "water",
            "green spaces",
            "carbon",
            "sustainability",
        ],
        beneficiaries: &["neighbours", "residents", "gardeners", "councils"],
        outputs: &["repair cafe", "urban garden", "river monitoring network"],
    },
    Topic {
        keywords: &[
            "inclusion",
            "refugees",
            "migrants",
            "elderly",
            "homelessness",
            "communities",
            "youth",
        ],
        beneficiaries: &["refugees", "newcomers", "young people", "seniors"],
        outputs: &["mentoring circle", "language cafe", "housing desk"],
    },
    Topic {
        keywords: &[
            "safety",
            "crime",
            "resilience",
            "emergency",
            "disaster",
            "security",
            "privacy",
        ],
        beneficiaries: &["residents", "first responders", "shopkeepers", "parents"],
        outputs: &["alert network", "safety map", "response toolkit"],
    },
    Topic {
        keywords: &[
            "education",
            "schools",
            "students",
            "teachers",
            "literacy",
            "learning",
            "skills",
        ],
        beneficiaries: &["students", "teachers", "adult learners", "pupils"],
        outputs: &["reading club", "tutoring platform", "coding course"],
    },
    Topic {
        keywords: &[
            "employment",
            "jobs",
            "unemployment",
            "entrepreneurs",
            "income",
            "startups",
            "livelihoods",
        ],
        beneficiaries: &["jobseekers", "entrepreneurs", "women", "graduates"],
        outputs: &["job matching service", "microcredit fund", "incubator"],
    },
    Topic {
        keywords: &[
            "digital",
            "platform",
            "software",
            "data",
            "sensors",
            "online",
            "mobile app",
        ],
        beneficiaries: &["citizens", "developers", "small charities", "volunteers"],
        outputs: &["open data portal", "sensor kit", "mobile app"],
    },
];

const NAME_PARTS: (&[&str], &[&str]) = (
    &[
        "Green", "Open", "Bright", "River", "Common", "Urban", "Kind", "North", "Sun", "Blue",
        "Silver", "Oak",
    ],
    &[
        "Bridge", "Roots", "Path", "Circle", "Works", "Link", "Harbour", "Field", "Spark", "Nest",
        "Lab", "Commons",
    ],
);
const PLACES: &[&str] = &[
    "Lisbon", "Porto", "Madrid", "Valencia", "Lyon", "Ghent", "Leeds", "Glasgow", "Dublin",
    "Turin", "Krakow", "Tallinn", "Malmo", "Bremen", "Graz", "Athens",
];
const ORGS: &[&str] = &[
    "a local charity",
    "the city council",
    "a regional university",
    "two social enterprises",
    "a housing association",
    "a network of volunteers",
    "a community foundation",
    "a cooperative bank",
];
const TECH: &[&str] = &[
    "peer mentoring",
    "participatory design",
    "low cost sensors",
    "open source tools",
    "shared ownership",
    "citizen science",
];

const OBJECTIVE_TEMPLATES: &[&str] = &[
    "{name} aims to improve {kw} for {ben} in {place}.",
    "Our goal is to reduce problems with {kw} and to strengthen {kw2} for {ben}.",
    "The initiative seeks to make {kw} affordable for {ben} across {place}.",
];
const ACTOR_TEMPLATES: &[&str] = &[
    "{name} is run by {org} together with {org2}.",
    "The consortium brings together {org}, {org2} and local {ben}.",
    "Partners include {org} and several groups of {ben} in {place}.",
];
const OUTPUT_TEMPLATES: &[&str] = &[
    "The team has built a {out} that helps {ben} manage {kw}.",
    "So far the project has trained {num} {ben} and opened {num2} sites for its {out}.",
    "We developed a {out} for {kw} and {kw2} in {place}.",
];
const INNOVATION_TEMPLATES: &[&str] = &[
    "Unlike existing services, {name} combines {kw} with {tech} in a new way.",
    "The approach is novel because {ben} design the {out} themselves through {tech}.",
    "{name} introduces {tech} to {kw}, which nobody has tried in {place} before.",
];
const GENERIC_TEMPLATES: &[&str] = &[
    "The team met in {place} last spring.",
    "We published a short video about our journey in {year}.",
    "Volunteers joined the summer festival in {place}.",
    "The office moved to a new building in {year}.",
    "Our coordinator gave a talk at a conference in {place2}.",
    "We celebrated our anniversary with a picnic in {year}.",
    "The board approved the annual report in {year}.",
    "A journalist visited our workshop in {place2}.",
    "We recruited two interns from {place2} last autumn.",
    "The newsletter reached its hundredth issue in {year}.",
];
const BOILERPLATE_WITH_VERB: &[&str] = &[
    "Click here to subscribe to our newsletter.",
    "Read our privacy policy before you continue.",
    "Follow us on social media for the latest updates.",
    "Please enable cookies to use all features of this site.",
    "Share this page with your friends.",
];
/// Vocabulary of the narrative padding in long descriptions; none of these
/// words appear on the generated web pages.
const HISTORY_WORDS: &[&str] = &[
    "archives",
    "chronicles",
    "manuscripts",
    "ancestors",
    "pioneers",
    "heritage",
    "memoirs",
    "folklore",
    "tapestry",
    "legends",
    "lineage",
    "parchment",
    "almanac",
    "monastery",
    "guildhall",
    "cartographers",
    "scribes",
    "relics",
    "medieval",
    "antiquity",
    "dynasty",
    "heraldry",
    "pilgrims",
    "voyages",
    "caravans",
    "merchants",
    "lanterns",
    "ballads",
    "sagas",
    "epochs",
    "centuries",
    "bygone",
    "ancient",
    "venerable",
    "storied",
    "forgotten",
    "dusty",
    "gilded",
    "weathered",
    "candlelit",
];
const GERMAN: &[&str] = &[
    "Wir bauen Netzwerke für Menschen in unserer Stadt.",
    "Unser Projekt hilft Familien jeden Tag mit neuen Ideen.",
    "Die Gruppe trifft sich jeden Montag im Gemeindehaus.",
    "Kinder lernen hier gemeinsam kochen und gärtnern.",
];

/// How a project's existing description relates to the policy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionKind {
    Missing,
    Short,
    Long,
    /// Project whose pages are pure navigation text or non-English.
    Unusable,
}

/// What the generator planted for one project.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectTruth {
    pub project_id: String,
    pub topic: usize,
    pub description_kind: DescriptionKind,
    pub criterion_sentences: Vec<(Criterion, String)>,
    pub copied_sentences: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub projects: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            projects: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pages: Vec<PageRecord>,
    pub descriptions: Vec<DescriptionRecord>,
    pub annotations: Vec<AnnotationRecord>,
    pub ratings: Vec<RatingRecord>,
    pub truth: Vec<ProjectTruth>,
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub corpus: PathBuf,
    pub descriptions: PathBuf,
    pub annotations: PathBuf,
    pub ratings: PathBuf,
}

struct Filler<'a> {
    name: String,
    topic: &'a Topic,
    place: &'static str,
}

impl Filler<'_> {
    fn fill(&self, template: &str, rng: &mut ChaCha8Rng) -> String {
        let mut kws: Vec<&str> = self.topic.keywords.to_vec();
        kws.shuffle(rng);
        let mut orgs: Vec<&str> = ORGS.to_vec();
        orgs.shuffle(rng);
        let place2 = *PLACES.choose(rng).expect("non-empty");
        let text = template
            .replace("{name}", &self.name)
            .replace("{kw2}", kws[1])
            .replace("{kw}", kws[0])
            .replace(
                "{ben}",
                self.topic.beneficiaries.choose(rng).expect("non-empty"),
            )
            .replace("{out}", self.topic.outputs.choose(rng).expect("non-empty"))
            .replace("{org2}", orgs[1])
            .replace("{org}", orgs[0])
            .replace("{tech}", TECH.choose(rng).expect("non-empty"))
            .replace("{place2}", place2)
            .replace("{place}", self.place)
            .replace("{num2}", &rng.gen_range(2..9).to_string())
            .replace("{num}", &rng.gen_range(20..400).to_string())
            .replace("{year}", &rng.gen_range(2009..2020).to_string());
        let mut chars = text.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => text,
        }
    }
}

fn description_kind(i: usize, rng: &mut ChaCha8Rng) -> DescriptionKind {
    if i % 100 == 7 || i % 100 == 57 {
        return DescriptionKind::Unusable;
    }
    match rng.gen_range(0..10) {
        0..=3 => DescriptionKind::Long,
        4..=6 => DescriptionKind::Missing,
        _ => DescriptionKind::Short,
    }
}

impl SyntheticCorpus {
    pub fn generate(cfg: SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut pages = Vec::new();
        let mut descriptions = Vec::new();
        let mut truth = Vec::new();

        for i in 0..cfg.projects {
            let project_id = format!("proj-{i:04}");
            let topic_id = rng.gen_range(0..TOPICS.len());
            let filler = Filler {
                name: format!(
                    "{}{}",
                    NAME_PARTS.0.choose(&mut rng).expect("non-empty"),
                    NAME_PARTS.1.choose(&mut rng).expect("non-empty")
                ),
                topic: &TOPICS[topic_id],
                place: PLACES.choose(&mut rng).expect("non-empty"),
            };
            let kind = description_kind(i, &mut rng);
            let url = |page: &str| Some(format!("https://{}.example.org/{page}", project_id));

            if kind == DescriptionKind::Unusable {
                let text = if i % 100 == 7 {
                    format!(
                        "Home | About us | News | Contact\nMenu\nCopyright {} {}",
                        2020, filler.name
                    )
                } else {
                    GERMAN.join(" ")
                };
                pages.push(PageRecord {
                    project_id: project_id.clone(),
                    page_type: PageType::Main,
                    url: url(""),
                    text,
                });
                truth.push(ProjectTruth {
                    project_id,
                    topic: topic_id,
                    description_kind: kind,
                    criterion_sentences: Vec::new(),
                    copied_sentences: Vec::new(),
                });
                continue;
            }

            let mut key: Vec<(Criterion, String)> = Vec::new();
            for (criterion, templates) in [
                (Criterion::Objectives, OBJECTIVE_TEMPLATES),
                (Criterion::Actors, ACTOR_TEMPLATES),
                (Criterion::Outputs, OUTPUT_TEMPLATES),
                (Criterion::Innovativeness, INNOVATION_TEMPLATES),
            ] {
                let count = rng.gen_range(1..=2);
                let mut ts: Vec<&str> = templates.to_vec();
                ts.shuffle(&mut rng);
                for t in ts.into_iter().take(count) {
                    key.push((criterion, filler.fill(t, &mut rng)));
                }
            }
            let generic: Vec<String> = {
                let mut ts: Vec<&str> = GENERIC_TEMPLATES.to_vec();
                ts.shuffle(&mut rng);
                let n = rng.gen_range(6..=8);
                ts.into_iter()
                    .take(n)
                    .map(|t| filler.fill(t, &mut rng))
                    .collect()
            };

            let split = key.len() / 2;
            let main_sentences: Vec<&str> = key[..split]
                .iter()
                .map(|(_, s)| s.as_str())
                .chain(generic[..2].iter().map(String::as_str))
                .collect();
            let main = format!(
                "Home | About us | News | Contact\n{}\n{}\n{}",
                main_sentences.join(" "),
                BOILERPLATE_WITH_VERB[..2].join(" "),
                "Search"
            );
            let about_sentences: Vec<&str> = key[split..]
                .iter()
                .map(|(_, s)| s.as_str())
                .chain(generic[2..5].iter().map(String::as_str))
                .collect();
            let about = format!(
                "{}\n{}\nCopyright {} {}",
                about_sentences.join(" "),
                BOILERPLATE_WITH_VERB[2..].join(" "),
                rng.gen_range(2015..2021),
                filler.name
            );
            pages.push(PageRecord {
                project_id: project_id.clone(),
                page_type: PageType::Main,
                url: url(""),
                text: main,
            });
            pages.push(PageRecord {
                project_id: project_id.clone(),
                page_type: PageType::About,
                url: url("about"),
                text: about,
            });
            if generic.len() > 5 {
                pages.push(PageRecord {
                    project_id: project_id.clone(),
                    page_type: PageType::Description,
                    url: url("project"),
                    text: generic[5..].join(" "),
                });
            }
            let news: Vec<String> = (0..3)
                .map(|_| {
                    filler.fill(
                        GENERIC_TEMPLATES.choose(&mut rng).expect("non-empty"),
                        &mut rng,
                    )
                })
                .collect();
            pages.push(PageRecord {
                project_id: project_id.clone(),
                page_type: PageType::Other,
                url: url("news"),
                text: news.join(" "),
            });

            let mut copied: Vec<String> = Vec::new();
            if kind != DescriptionKind::Missing {
                let n = rng.gen_range(2..=4.min(key.len()));
                let mut idx: Vec<usize> = (0..key.len()).collect();
                idx.shuffle(&mut rng);
                idx.truncate(n);
                idx.sort_unstable();
                copied = idx.iter().map(|&k| key[k].1.clone()).collect();
                let mut text = copied.join(" ");
                match kind {
                    DescriptionKind::Short => {
                        let _ = write!(
                            text,
                            " In short, {} works on {} with {}.",
                            filler.name, filler.topic.keywords[0], filler.topic.beneficiaries[0]
                        );
                    }
                    DescriptionKind::Long => {
                        while tokenize(&text).len() <= 1000 {
                            let words: Vec<&str> = HISTORY_WORDS
                                .choose_multiple(&mut rng, 8)
                                .copied()
                                .collect();
                            let mut s = words.join(" ");
                            s[..1].make_ascii_uppercase();
                            let _ = write!(text, " {s}.");
                        }
                    }
                    _ => {}
                }
                descriptions.push(DescriptionRecord {
                    project_id: project_id.clone(),
                    description: text,
                });
            }
            truth.push(ProjectTruth {
                project_id,
                topic: topic_id,
                description_kind: kind,
                criterion_sentences: key,
                copied_sentences: copied,
            });
        }

        let annotations = annotate(&truth, &pages, cfg.projects);
        let ratings = rate(&truth, &mut rng);
        SyntheticCorpus {
            pages,
            descriptions,
            annotations,
            ratings,
            truth,
        }
    }

    /// Writes `corpus.jsonl`, `descriptions.jsonl`, `annotations.jsonl` and
    /// `ratings.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<CorpusPaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = CorpusPaths {
            corpus: dir.join("corpus.jsonl"),
            descriptions: dir.join("descriptions.jsonl"),
            annotations: dir.join("annotations.jsonl"),
            ratings: dir.join("ratings.jsonl"),
        };
        write_jsonl(&paths.corpus, &self.pages)?;
        write_jsonl(&paths.descriptions, &self.descriptions)?;
        write_jsonl(&paths.annotations, &self.annotations)?;
        write_jsonl(&paths.ratings, &self.ratings)?;
        Ok(paths)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn quotas(projects: usize) -> Vec<(Criterion, usize)> {
    ANNOTATION_QUOTAS
        .iter()
        .map(|&(c, n)| (c, (n * projects + 150) / 300))
        .collect()
}

/// Annotates planted criterion sentences and verb-bearing filler sentences as
/// `none`, project by project, until each criterion's quota is filled.
fn annotate(
    truth: &[ProjectTruth],
    pages: &[PageRecord],
    projects: usize,
) -> Vec<AnnotationRecord> {
    let mut remaining = quotas(projects);
    let mut out = Vec::new();
    for t in truth
        .iter()
        .filter(|t| t.description_kind != DescriptionKind::Unusable)
    {
        let mut sentences: Vec<(Criterion, String)> = t.criterion_sentences.clone();
        for p in pages
            .iter()
            .filter(|p| p.project_id == t.project_id && p.page_type != PageType::Other)
        {
            for s in crate::corpus::segment_sentences(&p.text) {
                let is_key = t.criterion_sentences.iter().any(|(_, k)| *k == s);
                let survives = crate::corpus::has_verb(&tokenize(&s));
                if !is_key && survives && !sentences.iter().any(|(_, x)| *x == s) {
                    sentences.push((Criterion::None, s));
                }
            }
        }
        for (criterion, text) in sentences {
            let slot = remaining
                .iter_mut()
                .find(|(c, _)| *c == criterion)
                .expect("all criteria");
            if slot.1 > 0 {
                slot.1 -= 1;
                out.push(AnnotationRecord {
                    project_id: t.project_id.clone(),
                    sentence_text: text,
                    criterion,
                    line: 0,
                });
            }
        }
    }
    out
}

fn rate(truth: &[ProjectTruth], rng: &mut ChaCha8Rng) -> Vec<RatingRecord> {
    let methods = [
        ("binary_svm", 2.0),
        ("si_svm", 3.0),
        ("rnn", 3.5),
        ("stacked", 3.5),
        ("policy", 3.5),
    ];
    let mut out = Vec::new();
    for t in truth
        .iter()
        .filter(|t| {
            matches!(
                t.description_kind,
                DescriptionKind::Missing | DescriptionKind::Long
            )
        })
        .take(40)
    {
        for (method, base) in methods {
            for rater in ["r1", "r2"] {
                let score: f64 = (base + rng.gen_range(-1.0..1.0f64)).clamp(0.0, 5.0);
                out.push(RatingRecord {
                    project_id: t.project_id.clone(),
                    method_tag: method.to_string(),
                    score: (score * 2.0).round() / 2.0,
                    rater_id: rater.to_string(),
                });
            }
        }
    }
    out
}

const NOUNS: &[&str] = &[
    "apple",
    "anchor",
    "arrow",
    "badge",
    "banner",
    "barrel",
    "basket",
    "beacon",
    "blanket",
    "bottle",
    "bracket",
    "bucket",
    "button",
    "cabin",
    "candle",
    "canvas",
    "carpet",
    "castle",
    "cellar",
    "chair",
    "chimney",
    "circuit",
    "cloud",
    "compass",
    "copper",
    "cotton",
    "crystal",
    "curtain",
    "cushion",
    "desert",
    "diamond",
    "dolphin",
    "engine",
    "fabric",
    "falcon",
    "feather",
    "fence",
    "forest",
    "fountain",
    "garden",
    "glacier",
    "granite",
    "guitar",
    "hammer",
    "harbor",
    "helmet",
    "island",
    "jacket",
    "jungle",
    "kettle",
    "kitchen",
    "ladder",
    "lantern",
    "lemon",
    "library",
    "magnet",
    "marble",
    "meadow",
    "mirror",
    "mountain",
    "needle",
    "nickel",
    "ocean",
    "orchard",
    "oven",
    "paddle",
    "palace",
    "pencil",
    "pepper",
    "pillow",
    "planet",
    "pocket",
    "pottery",
    "puzzle",
    "quarry",
    "rabbit",
    "radar",
    "ribbon",
    "rocket",
    "saddle",
    "salmon",
    "satellite",
    "scarf",
    "shelter",
    "shovel",
    "silk",
    "sponge",
    "statue",
    "stove",
    "sugar",
    "summit",
    "tablet",
    "teapot",
    "temple",
    "thunder",
    "timber",
    "tomato",
    "tower",
    "tractor",
    "trumpet",
    "tunnel",
    "turtle",
    "umbrella",
    "valley",
    "velvet",
    "violin",
    "volcano",
    "wagon",
    "walnut",
    "whistle",
    "window",
    "winter",
    "wizard",
    "wool",
    "yacht",
    "zebra",
    "harp",
    "lobster",
    "maple",
];
const VERBS: &[&str] = &[
    "build", "paint", "carry", "wash", "clean", "repair", "polish", "collect", "deliver",
    "arrange", "inspect", "measure", "borrow", "design", "sketch", "weigh", "fold", "stack",
    "sort", "count", "lift", "pack", "ship", "store", "mend", "trade", "test", "visit", "plant",
    "guard", "heat", "cool", "cover", "open", "close", "wrap", "fill", "print", "scan", "label",
];
const DISTRACTORS: &[&str] = &[
    "aurora", "bamboo", "cactus", "dune", "ember", "fjord", "geyser", "hazel", "iris", "jasmine",
    "kelp", "lagoon", "mango", "nebula", "onyx", "papaya", "quartz", "reef", "saffron", "tundra",
    "utopia", "vortex", "willow", "xenon", "yarrow", "zenith", "amber", "basil", "cobalt",
    "dahlia", "ebony", "fern", "ginger", "heron", "indigo", "juniper", "kiwi", "lilac", "mimosa",
    "nutmeg", "olive", "peony", "quince", "rosemary", "sage", "thyme",
];

/// Documents whose descriptions copy a few sentences verbatim and add
/// distractor sentences from a separate vocabulary, with an embedding table
/// that gives the two vocabularies disjoint support.
#[derive(Debug, Clone)]
pub struct WeakLabelFixture {
    pub docs: Vec<Document>,
    pub descriptions: Vec<String>,
    pub copied: Vec<Vec<usize>>,
    pub table: EmbeddingTable,
}

pub fn weak_label_fixture(n_docs: usize, seed: u64) -> WeakLabelFixture {
    const HALF: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid");
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for w in NOUNS.iter().chain(VERBS) {
        let mut v = vec![0.0; 2 * HALF];
        v[..HALF]
            .iter_mut()
            .for_each(|x| *x = normal.sample(&mut rng));
        rows.push((w.to_string(), v));
    }
    for w in DISTRACTORS {
        let mut v = vec![0.0; 2 * HALF];
        v[HALF..]
            .iter_mut()
            .for_each(|x| *x = normal.sample(&mut rng));
        rows.push((w.to_string(), v));
    }
    let table = EmbeddingTable::from_rows(2 * HALF, rows).expect("distinct words");

    let mut docs = Vec::new();
    let mut descriptions = Vec::new();
    let mut copied = Vec::new();
    for d in 0..n_docs {
        let n_sent = rng.gen_range(6..=9);
        let mut nouns: Vec<&str> = NOUNS.to_vec();
        nouns.shuffle(&mut rng);
        let mut verbs: Vec<&str> = VERBS.to_vec();
        verbs.shuffle(&mut rng);
        let sentences: Vec<String> = (0..n_sent)
            .map(|s| format!("We {} {}.", verbs[s], nouns[4 * s..4 * s + 4].join(" ")))
            .collect();
        let k = rng.gen_range(2..=4);
        let mut chosen: Vec<usize> = (0..n_sent).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(k);
        chosen.sort_unstable();

        let mut desc: Vec<String> = chosen.iter().map(|&i| sentences[i].clone()).collect();
        for _ in 0..rng.gen_range(1..=3) {
            let words: Vec<&str> = DISTRACTORS.choose_multiple(&mut rng, 5).copied().collect();
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s.push('.');
            let at = rng.gen_range(0..=desc.len());
            desc.insert(at, s);
        }
        docs.push(Document::from_texts(format!("weak-{d:03}"), sentences));
        descriptions.push(desc.join(" "));
        copied.push(chosen);
    }
    WeakLabelFixture {
        docs,
        descriptions,
        copied,
        table,
    }
}

impl WeakLabelFixture {
    /// Writes the fixture as a one-page-per-project corpus, descriptions and
    /// an embedding file.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(CorpusPaths, PathBuf)> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let pages: Vec<PageRecord> = self
            .docs
            .iter()
            .map(|d| PageRecord {
                project_id: d.project_id.clone(),
                page_type: PageType::Main,
                url: None,
                text: d
                    .sentences
                    .iter()
                    .map(|s| s.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            })
            .collect();
        let descriptions: Vec<DescriptionRecord> = self
            .docs
            .iter()
            .zip(&self.descriptions)
            .map(|(d, text)| DescriptionRecord {
                project_id: d.project_id.clone(),
                description: text.clone(),
            })
            .collect();
        let paths = CorpusPaths {
            corpus: dir.join("corpus.jsonl"),
            descriptions: dir.join("descriptions.jsonl"),
            annotations: dir.join("annotations.jsonl"),
            ratings: dir.join("ratings.jsonl"),
        };
        write_jsonl(&paths.corpus, &pages)?;
        write_jsonl(&paths.descriptions, &descriptions)?;
        write_jsonl::<AnnotationRecord>(&paths.annotations, &[])?;
        write_jsonl::<RatingRecord>(&paths.ratings, &[])?;
        let emb = dir.join("embeddings.vec");
        self.table.save(&emb)?;
        Ok((paths, emb))
    }
}

/// Two Gaussian clouds centred at `(2, 0)` (label `+1`) and `(-2, 0)`
/// (label `-1`), standard deviation 0.5, alternating labels.
pub fn separable_2d(n: usize, seed: u64) -> Vec<([f64; 2], f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).expect("valid");
    (0..n)
        .map(|i| {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            (
                [2.0 * y + noise.sample(&mut rng), noise.sample(&mut rng)],
                y,
            )
        })
        .collect()
}

const PLANTED: &[&str] = &[
    "keystone",
    "lighthouse",
    "catalyst",
    "cornerstone",
    "milestone",
];

/// Sentences over a shared filler vocabulary; positives also contain one of
/// a few planted tokens. Returns documents of 10 sentences each and one
/// `+1/-1` label per sentence.
#[derive(Debug, Clone)]
pub struct PlantedTextFixture {
    pub docs: Vec<Document>,
    pub labels: Vec<Vec<f64>>,
}

pub fn planted_text_fixture(sentences: usize, seed: u64) -> PlantedTextFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    let per_doc = 10;
    for d in 0..sentences.div_ceil(per_doc) {
        let n = per_doc.min(sentences - d * per_doc);
        let mut texts = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let positive = rng.gen_bool(0.5);
            let mut words: Vec<&str> = vec![VERBS.choose(&mut rng).expect("non-empty")];
            words.extend(NOUNS.choose_multiple(&mut rng, 5).copied());
            if positive {
                let at = rng.gen_range(1..=words.len());
                words.insert(at, PLANTED.choose(&mut rng).expect("non-empty"));
            }
            texts.push(format!("We {}.", words.join(" ")));
            ys.push(if positive { 1.0 } else { -1.0 });
        }
        docs.push(Document::from_texts(format!("text-{d:03}"), texts));
        labels.push(ys);
    }
    PlantedTextFixture { docs, labels }
}

/// Documents where summary-worthy sentences contain a planted token whose
/// embedding points in its own direction; the remaining words have small
/// random embeddings.
pub fn planted_rnn_fixture(n_docs: usize, seed: u64) -> (Vec<LabeledDocument>, EmbeddingTable) {
    const DIM: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut planted = vec![0.0; DIM];
    planted[0] = 3.0;
    rows.push(("keystone".to_string(), planted));
    for w in NOUNS.iter().chain(VERBS).take(60) {
        let mut v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-0.3..0.3)).collect();
        v[0] = 0.0;
        rows.push((w.to_string(), v));
    }
    let vocab: Vec<String> = rows[1..].iter().map(|(w, _)| w.clone()).collect();
    let table = EmbeddingTable::from_rows(DIM, rows).expect("distinct words");

    let docs = (0..n_docs)
        .map(|d| {
            let n = rng.gen_range(8..=14);
            let mut texts = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let positive = rng.gen_bool(0.3);
                let mut words: Vec<&str> = vocab
                    .choose_multiple(&mut rng, 5)
                    .map(String::as_str)
                    .collect();
                if positive {
                    words.insert(rng.gen_range(0..=words.len()), "keystone");
                }
                texts.push(format!("{}.", words.join(" ")));
                labels.push(if positive { 1.0 } else { 0.0 });
            }
            LabeledDocument {
                doc: Document::from_texts(format!("rnn-{d:03}"), texts),
                labels,
            }
        })
        .collect();
    (docs, table)
}

/// Documents drawn purely from one of two disjoint vocabularies. The flag is
/// true for vocabulary A.
pub fn planted_lda_fixture(n_docs: usize, tokens: usize, seed: u64) -> Vec<(Vec<String>, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|d| {
            let from_a = d % 2 == 0;
            let prefix = if from_a { "alpha" } else { "beta" };
            let doc = (0..tokens)
                .map(|_| format!("{prefix}{}", rng.gen_range(0..25)))
                .collect();
            (doc, from_a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{clean_corpus, has_verb};

    #[test]
    fn corpus_is_deterministic_and_shaped() {
        let a = SyntheticCorpus::generate(SynthConfig {
            projects: 300,
            seed: 3,
        });
        let b = SyntheticCorpus::generate(SynthConfig {
            projects: 300,
            seed: 3,
        });
        assert_eq!(a.pages, b.pages);
        let counts: Vec<usize> = ANNOTATION_QUOTAS
            .iter()
            .map(|(c, _)| a.annotations.iter().filter(|r| r.criterion == *c).count())
            .collect();
        assert_eq!(counts, vec![374, 217, 309, 256, 3167]);
        for d in &a.descriptions {
            let kind = a
                .truth
                .iter()
                .find(|t| t.project_id == d.project_id)
                .unwrap()
                .description_kind;
            let words = tokenize(&d.description).len();
            match kind {
                DescriptionKind::Long => assert!(words > 1000),
                DescriptionKind::Short => assert!(words <= 1000),
                other => panic!("unexpected description for {other:?}"),
            }
        }
    }

    #[test]
    fn planted_sentences_survive_cleaning() {
        let c = SyntheticCorpus::generate(SynthConfig {
            projects: 40,
            seed: 1,
        });
        let cleaned = clean_corpus(c.pages.clone());
        for (t, doc) in c.truth.iter().zip(&cleaned) {
            match (t.description_kind, doc) {
                (DescriptionKind::Unusable, r) => assert!(r.is_err()),
                (_, Ok(doc)) => {
                    for (_, s) in &t.criterion_sentences {
                        assert!(doc.sentences.iter().any(|x| x.text == *s), "{s}");
                    }
                }
                (_, Err(e)) => panic!("{}: {e}", t.project_id),
            }
        }
        for s in BOILERPLATE_WITH_VERB {
            assert!(has_verb(&tokenize(s)), "{s}");
        }
    }

    #[test]
    fn weak_fixture_sentences_have_verbs() {
        let f = weak_label_fixture(5, 1);
        for d in &f.docs {
            assert!(d.sentences.iter().all(|s| has_verb(&s.tokens)));
        }
    }
}
