//! Corpus preprocessing: tokenization, stop-word removal and stemming.
//!
//!     cargo run -p geoglove --example preprocess_text

use geoglove::corpus::{self, Document, StopWordList};

fn main() {
    let text = "Lithium-bearing pegmatites were mapped near Bikita; \
                the dikes carry spodumene, petalite and lepidolite at Tōkyō-grade assays.";
    println!("raw text:\n  {text}\n");

    let tokens = corpus::tokenize(text);
    println!("tokens ({}):\n  {}\n", tokens.len(), tokens.join(" "));

    let stops = StopWordList::default_english();
    let kept = corpus::remove_stop_words(tokens, &stops);
    println!(
        "after stop-word removal ({} stop words known):\n  {}\n",
        stops.len(),
        kept.join(" ")
    );

    let stemmed: Vec<String> = kept.iter().map(|t| corpus::stem(t)).collect();
    println!("after stemming:\n  {}\n", stemmed.join(" "));

    // the same stages through the corpus entry point
    let docs = [Document::new("note.txt", text)];
    let streams = corpus::process_corpus(&docs, &stops).expect("unique ids");
    println!(
        "process_corpus({}): {:?}",
        streams[0].doc_id, streams[0].tokens
    );
}
