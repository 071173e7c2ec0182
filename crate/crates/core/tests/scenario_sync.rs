//! The shipped scenario files match the built-in scenarios.

use std::fs::File;
use std::path::PathBuf;

use mediasched::{load_channel, load_trace, scenario};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn files_match_builtins() {
    for name in scenario::NAMES {
        let sc = scenario::by_name(name).unwrap().unwrap();
        let trace =
            load_trace(File::open(dir().join(format!("{name}.trace.json"))).unwrap()).unwrap();
        let channel =
            load_channel(File::open(dir().join(format!("{name}.channel.json"))).unwrap()).unwrap();
        assert_eq!(trace.to_json(), sc.trace.to_json(), "{name}");
        assert_eq!(channel.to_json(), sc.channel.to_json(), "{name}");
    }
    assert!(scenario::by_name("nope").is_none());
}
