use serde_json::json;

use apixplore::amos::parse_amos;
use apixplore::executor::{call_operation, HttpAdapter, InProcessAdapter, TransportError, DEFAULT_TIMEOUT_MS};
use apixplore::explorer::{explore, ExplorationConfig, ExploreError};
use apixplore::fixtures::{GROUPS_AMOS, PERSONS_AMOS};
use apixplore::metaprops::{MetaPropertyId, QueryContext};
use apixplore::refsut::{AnySut, GroupsConfig, GroupsSut, PersonsSut, PersonsVariant, SutId, SutServer};
use apixplore::report::render_data;

fn serve(id: SutId) -> SutServer {
    SutServer::start(AnySut::new(id, GroupsConfig::default()), "127.0.0.1:0").unwrap()
}

#[test]
fn http_exploration_matches_in_process() {
    let amos = parse_amos(PERSONS_AMOS).unwrap();
    let config = ExplorationConfig {
        seed: 42,
        tests_per_iteration: 30,
        iterations: 2,
        ..Default::default()
    };
    let server = serve(SutId::Persons(PersonsVariant::V2));
    let mut http = HttpAdapter::new(server.base_url(), DEFAULT_TIMEOUT_MS);
    let over_http = explore(&amos, &mut http, &config).unwrap();
    let mut local = InProcessAdapter::new(PersonsSut::new(PersonsVariant::V2));
    let in_process = explore(&amos, &mut local, &config).unwrap();
    assert_eq!(render_data(&over_http), render_data(&in_process));
    assert!(!over_http.examples(MetaPropertyId::MpR2).is_empty());
}

#[test]
fn ranged_query_aggregates_pages_over_http() {
    let amos = parse_amos(GROUPS_AMOS).unwrap();
    let server = serve(SutId::Groups);
    server.with_sut(|sut| match sut {
        AnySut::Groups(g) => g.seed_groups(45),
        AnySut::Persons(_) => unreachable!(),
    });
    let mut http = HttpAdapter::new(server.base_url(), DEFAULT_TIMEOUT_MS);
    let get = amos.operation("get-groups").unwrap();
    let obs = call_operation(&mut http, get, None).unwrap();
    let body = obs.body_value();
    assert_eq!(body.as_array().map(Vec::len), Some(45));
    assert_eq!(body[44]["id"], json!(45));

    let mut local = InProcessAdapter::new(GroupsSut::new(GroupsConfig::default()));
    local.sut_mut().seed_groups(45);
    assert_eq!(call_operation(&mut local, get, None).unwrap(), obs);
}

#[test]
fn state_exploration_over_http() {
    let amos = parse_amos(GROUPS_AMOS).unwrap();
    let server = serve(SutId::Groups);
    let mut http = HttpAdapter::new(server.base_url(), DEFAULT_TIMEOUT_MS);
    let config = ExplorationConfig {
        props: vec![MetaPropertyId::MpS4],
        seed: 42,
        tests_per_iteration: 20,
        iterations: 1,
        ctx: Some(QueryContext::new("get-groups")),
        ..Default::default()
    };
    let result = explore(&amos, &mut http, &config).unwrap();
    assert_eq!(result.examples(MetaPropertyId::MpS4).len(), 1);
}

#[test]
fn unreachable_server_is_a_transport_error() {
    let amos = parse_amos(PERSONS_AMOS).unwrap();
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut http = HttpAdapter::new(format!("http://127.0.0.1:{port}"), 500);
    let err = explore(&amos, &mut http, &ExplorationConfig::default()).unwrap_err();
    assert!(matches!(err, ExploreError::Transport(TransportError::Unreachable(_))), "{err}");
}
