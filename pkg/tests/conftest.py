from __future__ import annotations

import csv
import io
import random

import pytest

from datalake.service import Datalake

GRANT_ALL = ["upload", "transform", "visualize", "version", "share"]


@pytest.fixture
def lake(tmp_path):
    svc = Datalake(tmp_path / "store", fsync=False)
    svc.create_user("root", service_admin=True, actor=None)
    yield svc
    svc.close()


@pytest.fixture
def workspace(lake):
    return lake.create_workspace("Research", None, "root")


def make_member(lake, workspace_id, user, role, grants=()):
    if user not in lake.catalog.users:
        lake.create_user(user, service_admin=False, actor="root")
    lake.add_member(workspace_id, user, role, list(grants), "root")
    return user


def csv_bytes(headers, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    w.writerows(rows)
    return buf.getvalue().encode()


def upload_table(lake, workspace_id, name, headers, rows, actor="root",
                 corrections=None, description=""):
    staged = lake.stage_upload(workspace_id, name, description,
                               csv_bytes(headers, rows), actor)
    return lake.approve_upload(staged["id"], corrections or {}, actor)


def county_fixture(rows=220, seed=7):
    """Three synthetic county tables sharing FIPS codes, CDC/ACS style."""
    rng = random.Random(seed)
    fips = [f"{rng.randint(1, 56):02d}{rng.randint(1, 999):03d}" for _ in range(rows)]
    fips = sorted(set(fips))
    while len(fips) < rows:
        code = f"{rng.randint(1, 56):02d}{rng.randint(1, 999):03d}"
        if code not in fips:
            fips.append(code)
    income = [[f, f"County {f}", str(18000 + rng.randint(0, 90000))] for f in fips]
    education = [[f, f"{rng.uniform(5, 75):.1f}"] for f in fips]
    health = [[f, f"{rng.uniform(3, 12):.1f}"] for f in fips]
    return {
        "income": (["FIPS", "County", "Median_Household_Income"], income),
        "education": (["FIPS", "Percent_Bachelors_Or_Higher"], education),
        "health": (["FIPS", "Death_Rate"], health),
    }


def build_county_pipeline(lake, workspace_id, actor="root", rows=220, seed=7):
    """Ingest the three county tables, run the two merges, build the heat map."""
    from datalake.charts import ChartSpec
    from datalake.relops import MergePlan

    fx = county_fixture(rows=rows, seed=seed)
    income = upload_table(lake, workspace_id, "ACS Income", *fx["income"],
                          actor=actor, corrections={"FIPS": "Categorical"})
    education = upload_table(lake, workspace_id, "ACS Education", *fx["education"],
                             actor=actor, corrections={"FIPS": "Categorical"})
    health = upload_table(lake, workspace_id, "CDC Infant Mortality", *fx["health"],
                          actor=actor, corrections={"FIPS": "Categorical"})
    merge1 = lake.merge(MergePlan([income.id, education.id], [[("FIPS", "FIPS")]]),
                        "Income and Education", "", actor)
    merge2 = lake.merge(MergePlan([merge1.id, health.id], [[("FIPS_x", "FIPS")]]),
                        "County Analysis", "", actor)
    heatmap = lake.create_chart(
        merge2.id, None,
        ChartSpec(kind="heatmap2d", x="Percent_Bachelors_Or_Higher",
                  y="Median_Household_Income", color="Death_Rate",
                  interpolation="linear", title="Infant mortality heat map"),
        "IMR heat map", "Heat map of infant mortality against income and education", actor)
    return {"income": income, "education": education, "health": health,
            "merge1": merge1, "merge2": merge2, "heatmap": heatmap}
