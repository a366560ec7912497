use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use framekit::fndata::{ingest_corpus, CorpusFormat};
use framekit::query::{vp_json, QueryRequest};
use framekit::Corpus;
use framekit_service::Service;

fn toy() -> Corpus {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/corpus.jsonl");
    ingest_corpus(&path, CorpusFormat::NativeJsonl, Default::default())
        .unwrap()
        .corpus
}

async fn get(svc: &Service, uri: &str) -> (StatusCode, String) {
    let resp = svc
        .router()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

#[tokio::test]
async fn vp_body_is_the_library_serialization() {
    let corpus = toy();
    let svc = Service::new(corpus.clone());
    let (status, body) = get(&svc, "/vp?vp=Buyer.NP.Ext+Goods.NP.Obj").await;
    assert_eq!(status, StatusCode::OK);
    let req = QueryRequest {
        vp: "Buyer.NP.Ext Goods.NP.Obj".into(),
        ..Default::default()
    };
    let snap = svc.snapshot();
    assert_eq!(body, vp_json(&req, &snap.index, &corpus).unwrap());
    assert!(
        body.contains("\"buy\"") && body.contains("\"purchase\""),
        "{body}"
    );
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let svc = Service::new(toy());
    for (uri, want) in [
        ("/vp?vp=Nonsense", StatusCode::BAD_REQUEST),
        ("/vp", StatusCode::BAD_REQUEST),
        ("/vp?vp=Buyer.NP.Ext&limit=0", StatusCode::BAD_REQUEST),
        ("/vp?vp=Buyer.NP.Ext&limit=many", StatusCode::BAD_REQUEST),
        ("/vp?vp=Nobody.NP.Ext", StatusCode::NOT_FOUND),
        ("/vp?vp=Time.NP.Dep", StatusCode::UNPROCESSABLE_ENTITY),
        ("/vp?vp=Time.NP.Dep&frame=Getting", StatusCode::OK),
        ("/lu/999999", StatusCode::NOT_FOUND),
        ("/lu/abc", StatusCode::BAD_REQUEST),
        ("/lu/101", StatusCode::OK),
        ("/annoset/1001", StatusCode::OK),
        ("/annoset/7", StatusCode::NOT_FOUND),
    ] {
        let (status, body) = get(&svc, uri).await;
        assert_eq!(status, want, "{uri}: {body}");
        assert!(body.contains("\"api_version\":\"1\""), "{uri}: {body}");
    }
}

#[tokio::test]
async fn unattested_pattern_gives_empty_results() {
    let svc = Service::new(toy());
    let (status, body) = get(&svc, "/vp?vp=Buyer.PP.Dep+Seller.AVP.Obj").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.contains("\"results\":[]"), "{body}");
}

#[tokio::test]
async fn reload_changes_the_fingerprint() {
    let corpus = toy();
    let svc = Service::new(corpus.clone());
    let (_, before) = get(&svc, "/health").await;
    let mut smaller = corpus.clone();
    let first = *smaller.annotation_sets.keys().next().unwrap();
    smaller.annotation_sets.remove(&first);
    svc.reload(smaller);
    let (status, after) = get(&svc, "/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_ne!(before, after);
    assert!(after.contains(&format!(
        "\"annosets\":{}",
        corpus.annotation_sets.len() - 1
    )));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_storm_sees_consistent_responses() {
    let svc = Service::new(toy());
    let (_, health) = get(&svc, "/health").await;
    let (_, vp) = get(&svc, "/vp?vp=Buyer.NP.Ext+Goods.NP.Obj").await;
    let mut tasks = Vec::new();
    for i in 0..200 {
        let svc = svc.clone();
        let (uri, want) = if i % 2 == 0 {
            ("/health", health.clone())
        } else {
            ("/vp?vp=Buyer.NP.Ext+Goods.NP.Obj", vp.clone())
        };
        tasks.push(tokio::spawn(async move {
            let (status, body) = get(&svc, uri).await;
            status == StatusCode::OK && body == want
        }));
    }
    for t in tasks {
        assert!(t.await.unwrap());
    }
}
