//! Cleans a handful of crawled pages into sentence documents and shows what
//! is dropped along the way.

use projsum::corpus::{clean_corpus, parse_corpus};

const PAGES: &str = r#"{"project_id":"p1","page_type":"about","text":"We were founded in 2015 by three teachers. Our mission is simple."}
{"project_id":"p1","page_type":"main","text":"Welcome! We repair bicycles with refugees in Leeds. Home | News | Contact"}
{"project_id":"p1","page_type":"other","text":"Cookie policy. We use cookies."}
{"project_id":"p2","page_type":"main","text":"Wir reparieren Fahrräder gemeinsam mit Geflüchteten in unserer Stadt und bieten Kurse an."}
{"project_id":"p3","page_type":"main","text":"Menu Footer Links"}
not json at all
"#;

fn main() {
    let loaded = parse_corpus(PAGES.as_bytes()).expect("in-memory read");
    for e in &loaded.errors {
        println!("line {}: {} ({})", e.line, e.message, e.code);
    }
    for doc in clean_corpus(loaded.records) {
        match doc {
            Ok(doc) => {
                println!(
                    "{}: {} sentences, {} words",
                    doc.project_id,
                    doc.len(),
                    doc.word_count()
                );
                for s in &doc.sentences {
                    println!("  [{}] pos={:.2} {}", s.index, s.position_norm, s.text);
                }
            }
            Err(e) => println!("rejected: {e}"),
        }
    }
}
