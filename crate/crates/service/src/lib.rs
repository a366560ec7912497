//! HTTP front end for valence-pattern queries.
//!
//! Every endpoint is a GET over an immutable snapshot. Reloading builds a new
//! snapshot and swaps it in whole, so in-flight requests finish against the
//! data they started with.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use framekit::query::{
    annoset_response, corpus_fingerprint, health_response, lu_response, to_json, vp_json,
    ErrorBody, QueryError, QueryRequest, API_VERSION,
};
use framekit::{AnnoSetId, Corpus, LuId, ValenceIndex};

/// Corpus plus the index built from it.
pub struct Snapshot {
    pub corpus: Corpus,
    pub index: ValenceIndex,
    pub fingerprint: String,
}

impl Snapshot {
    pub fn new(corpus: Corpus) -> Self {
        let index = ValenceIndex::build(&corpus);
        let fingerprint = corpus_fingerprint(&corpus);
        Snapshot {
            corpus,
            index,
            fingerprint,
        }
    }
}

/// Shared handle to the current snapshot.
#[derive(Clone)]
pub struct Service {
    current: Arc<RwLock<Arc<Snapshot>>>,
}

impl Service {
    pub fn new(corpus: Corpus) -> Self {
        Service {
            current: Arc::new(RwLock::new(Arc::new(Snapshot::new(corpus)))),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }

    /// Index `corpus` and make it the live snapshot.
    pub fn reload(&self, corpus: Corpus) {
        let next = Arc::new(Snapshot::new(corpus));
        log::info!("reloaded corpus {}", next.fingerprint);
        *self.current.write().expect("snapshot lock") = next;
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/health", get(health))
            .route("/vp", get(vp))
            .route("/lu/{id}", get(lu))
            .route("/annoset/{id}", get(annoset))
            .with_state(self.clone())
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn query_error(e: &QueryError) -> Response {
    let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::BAD_REQUEST);
    json(status, to_json(&ErrorBody::from(e)))
}

fn bad_request(message: String) -> Response {
    let body = ErrorBody {
        api_version: API_VERSION,
        error: "bad_request",
        message,
    };
    json(StatusCode::BAD_REQUEST, to_json(&body))
}

async fn health(State(svc): State<Service>) -> Response {
    let snap = svc.snapshot();
    let doc = health_response(&snap.corpus, &snap.index, &snap.fingerprint);
    json(StatusCode::OK, to_json(&doc))
}

fn parse_request(params: Vec<(String, String)>) -> Result<QueryRequest, String> {
    let mut req = QueryRequest::default();
    let number = |key: &str, v: &str| {
        v.parse::<usize>()
            .map_err(|_| format!("{key} must be a non-negative integer, got {v:?}"))
    };
    for (k, v) in params {
        match k.as_str() {
            "vp" => req.vp = v,
            "frame" => req.frame = Some(v),
            "limit" => req.limit = Some(number("limit", &v)?),
            "offset" => req.offset = Some(number("offset", &v)?),
            other => return Err(format!("unknown parameter {other:?}")),
        }
    }
    Ok(req)
}

async fn vp(State(svc): State<Service>, Query(params): Query<Vec<(String, String)>>) -> Response {
    let req = match parse_request(params) {
        Ok(r) => r,
        Err(msg) => return bad_request(msg),
    };
    let snap = svc.snapshot();
    match vp_json(&req, &snap.index, &snap.corpus) {
        Ok(body) => json(StatusCode::OK, body),
        Err(e) => query_error(&e),
    }
}

async fn lu(State(svc): State<Service>, Path(id): Path<String>) -> Response {
    let Ok(id) = id.parse::<u32>() else {
        return bad_request(format!("invalid lexical unit id {id:?}"));
    };
    let snap = svc.snapshot();
    match lu_response(&snap.corpus, LuId(id)) {
        Ok(doc) => json(StatusCode::OK, to_json(&doc)),
        Err(e) => query_error(&e),
    }
}

async fn annoset(State(svc): State<Service>, Path(id): Path<String>) -> Response {
    let Ok(id) = id.parse::<u32>() else {
        return bad_request(format!("invalid annotation set id {id:?}"));
    };
    let snap = svc.snapshot();
    match annoset_response(&snap.corpus, AnnoSetId(id)) {
        Ok(doc) => json(StatusCode::OK, to_json(&doc)),
        Err(e) => query_error(&e),
    }
}

/// Bind `addr` and serve until ctrl-c.
pub async fn serve(service: Service, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, service.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
