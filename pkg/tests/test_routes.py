import pytest


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'


def test_index_lists_endpoints(client):
    endpoints = client.get('/').get_json()['endpoints']
    assert '/power' in endpoints and '/planner/sweep' in endpoints


# ========== PROFILES ==========

def test_default_profiles_are_seeded(client):
    profiles = client.get('/profiles').get_json()
    assert [p['name'] for p in profiles] == ['ispu-10mhz', 'ispu-5mhz']
    assert profiles[0]['currents_ma']['mcu_regular_wf'] == 4.8


def test_create_profile(client):
    response = client.post('/profiles', json={'name': 'desk-rig', 'odr_hz': 52, 'description': 'bench board',
                                              'currents_ma': {'imu_only': 0.5}})
    assert response.status_code == 201
    body = response.get_json()
    assert body['odr_hz'] == 52.0
    assert body['currents_ma']['imu_only'] == 0.5
    assert body['description'] == 'bench board'
    assert client.get('/profiles/desk-rig').status_code == 200

    duplicate = client.post('/profiles', json={'name': 'desk-rig'})
    assert duplicate.status_code == 409


@pytest.mark.parametrize('document', [
    {'name': 'bad', 'odr_hz': -5},
    {'name': 'bad', 'laser_power': 3},
    {'name': 'Bad Name'},
    {'name': 'bad', 'data_ram_bytes': 65536},
])
def test_invalid_profiles(client, document):
    response = client.post('/profiles', json=document)
    assert response.status_code == 400
    assert response.get_json()['error'] == 'ProfileError'


def test_unknown_profile_is_404(client):
    response = client.get('/profiles/nope')
    assert response.status_code == 404
    assert response.get_json()['error'] == 'NotFound'


# ========== POWER ==========

def test_power_comparison(client):
    body = client.get('/power').get_json()
    currents = {r['pipeline']: r['avg_current_ma'] for r in body['reports']}
    assert currents == pytest.approx({'regular_wf': 5.4, 'regular_df': 6.5, 'ours': 4.8})


def test_power_single_pipeline(client):
    body = client.get('/power?pipeline=ours&wake_fraction=0&duration_s=3600').get_json()
    assert body['report']['reduction_vs_regular_pct'] == 15
    assert body['report']['energy_j'] == pytest.approx(29.808)


def test_power_validation(client):
    response = client.get('/power?wake_fraction=2')
    assert response.status_code == 400
    assert 'wake_fraction' in response.get_json()['errors']
    assert client.get('/power?profile=nope').status_code == 404


# ========== PLANNER ==========

def test_model_summary(client):
    body = client.get('/planner/model').get_json()
    assert body['window_len'] == 26
    assert body['feature_dim'] == 16
    assert body['cost_model']['runtime_overhead_bytes'] == 1651


def test_sweep(client):
    body = client.get('/planner/sweep?first_s=5&last_s=8&mode=width_first').get_json()
    assert [row['ram_ok'] for row in body['rows']] == [True, True, False, False]
    response = client.get('/planner/sweep?first_s=8&last_s=5')
    assert response.status_code == 400


def test_feasibility(client):
    body = client.get('/planner/feasibility?mode=depth_first&window_s=1').get_json()
    assert body['report']['max_odr_hz'] == 158.7
    assert body['report']['mem_bytes'] == 3891

    body = client.get('/planner/feasibility?mode=width_first&window_s=6&odr_hz=44').get_json()
    assert body['report']['timing_ok_at_odr'] is False
    assert body['report']['window_len'] == 264


# ========== SIMULATIONS ==========

def test_simulation_round_trip(client):
    response = client.post('/simulations', json={'label': 'not_worn', 'seconds': 30, 'seed': 2})
    assert response.status_code == 201
    run = response.get_json()
    assert run['profile'] == 'ispu-10mhz'
    assert run['windows_total'] == 30
    assert run['samples_lost'] == 0
    assert len(run['report']['decisions']) == 30

    listed = client.get('/simulations').get_json()
    assert [r['id'] for r in listed] == [run['id']]
    fetched = client.get(f'/simulations/{run["id"]}').get_json()
    assert fetched['report'] == run['report']


def test_simulation_regular_pipeline(client):
    run = client.post('/simulations', json={'pipeline': 'regular', 'mode': 'width_first', 'seconds': 10}).get_json()
    assert run['avg_current_ma'] == pytest.approx(5.4)
    assert run['wake_fraction'] == 1.0


def test_simulation_validation(client):
    assert client.post('/simulations', json={'label': 'asleep'}).status_code == 400
    assert client.post('/simulations', json={'profile': 'nope'}).status_code == 404
    assert client.get('/simulations/999').status_code == 404
