import logging

import numpy as np
import pytest

import fruitgrade.embeddings as emb_mod
from fruitgrade.datasets import DatasetManifest, ManifestEntry, build_manifest
from fruitgrade.embeddings import (
    EmbeddingSet,
    extract_embeddings,
    import_embeddings,
    save_embeddings_csv,
)
from fruitgrade.errors import DataError
from fruitgrade.imageprep import PreprocessSpec


@pytest.fixture()
def counting_forward(monkeypatch):
    """Wrap the forward pass with a call counter."""
    calls = {"n": 0}
    original = emb_mod.forward_cls

    def counted(img, store, **kw):
        calls["n"] += 1
        return original(img, store, **kw)

    monkeypatch.setattr(emb_mod, "forward_cls", counted)
    return calls


def test_extract_shapes_and_labels(fruit_manifest, tiny_store, tmp_path):
    es = extract_embeddings(fruit_manifest, tiny_store, tmp_path, jobs=2)
    assert es.vectors.shape == (48, 32)
    assert es.model_tag == "tiny"
    assert set(es.labels()) == set(fruit_manifest.class_names)
    assert np.isfinite(es.vectors).all()


def test_empty_manifest_no_cache_file(tiny_store, tmp_path):
    manifest = DatasetManifest(entries=(), class_names=("a", "b"),
                               preprocess=PreprocessSpec(target_side=32))
    es = extract_embeddings(manifest, tiny_store, tmp_path / "cache")
    assert len(es) == 0
    assert es.vectors.shape == (0, 32)
    assert not (tmp_path / "cache").exists() or not list((tmp_path / "cache").iterdir())


def test_warm_cache_zero_forward_passes(fruit_manifest, tiny_store, tmp_path,
                                        counting_forward):
    extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    first = counting_forward["n"]
    assert first == 48
    es2 = extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    assert counting_forward["n"] == first  # no new passes
    assert len(es2) == 48


def test_cache_file_bitwise_stable(fruit_manifest, tiny_store, tmp_path):
    extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    cache_files = list(tmp_path.iterdir())
    assert len(cache_files) == 1
    before = cache_files[0].read_bytes()
    extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    assert cache_files[0].read_bytes() == before


def test_cache_reload_bitwise_equal_vectors(fruit_manifest, tiny_store, tmp_path):
    es1 = extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    es2 = extract_embeddings(fruit_manifest, tiny_store, tmp_path)
    assert np.array_equal(es1.vectors, es2.vectors)
    assert es1.ids == es2.ids


def test_jobs_parallel_matches_serial(fruit_manifest, tiny_store, tmp_path):
    a = extract_embeddings(fruit_manifest, tiny_store, tmp_path / "c1", jobs=1)
    b = extract_embeddings(fruit_manifest, tiny_store, tmp_path / "c2", jobs=4)
    assert np.array_equal(a.vectors, b.vectors)


def test_edited_image_reembedded(fruit_root, tiny_store, tmp_path, counting_forward):
    manifest = build_manifest(fruit_root, preprocess=PreprocessSpec(target_side=32))
    extract_embeddings(manifest, tiny_store, tmp_path)
    base = counting_forward["n"]
    victim = manifest.entries[0].path
    original = victim.read_bytes()
    try:
        from PIL import Image

        Image.fromarray(np.full((48, 48, 3), 250, dtype=np.uint8)).save(victim)
        extract_embeddings(manifest, tiny_store, tmp_path)
        assert counting_forward["n"] == base + 1  # only the edited sample
    finally:
        victim.write_bytes(original)


def test_unreadable_sample_skipped_with_warning(fruit_root, tiny_store, tmp_path, caplog):
    manifest = build_manifest(fruit_root, preprocess=PreprocessSpec(target_side=32))
    victim = manifest.entries[3].path
    original = victim.read_bytes()
    try:
        victim.write_bytes(b"not a png at all")
        with caplog.at_level(logging.WARNING):
            es = extract_embeddings(manifest, tiny_store, tmp_path)
        assert len(es) == 47
        assert manifest.entries[3].sample_id not in es.ids
        assert manifest.entries[3].sample_id in caplog.text
    finally:
        victim.write_bytes(original)


def test_too_many_failures_abort(fruit_root, tiny_store, tmp_path):
    manifest = build_manifest(fruit_root, preprocess=PreprocessSpec(target_side=32))
    victims = [e.path for e in manifest.entries[:8]]  # 8/48 > 10%
    originals = [v.read_bytes() for v in victims]
    try:
        for v in victims:
            v.write_bytes(b"junk")
        with pytest.raises(DataError, match="failed to embed"):
            extract_embeddings(manifest, tiny_store, tmp_path)
    finally:
        for v, data in zip(victims, originals):
            v.write_bytes(data)


class TestCsvInterchange:
    def test_round_trip_exact(self, fruit_manifest, tiny_store, tmp_path):
        es = extract_embeddings(fruit_manifest, tiny_store, tmp_path / "cache")
        csv_path = tmp_path / "emb.csv"
        save_embeddings_csv(es, csv_path)
        head = csv_path.read_text().splitlines()[0]
        assert head.startswith("sample_id,label,e0,e1,")
        back = import_embeddings(csv_path, fruit_manifest, model_tag="tiny")
        assert back.ids == es.ids
        assert np.array_equal(back.vectors, es.vectors)
        assert np.array_equal(back.label_idx, es.label_idx)

    def test_unknown_id_rejected(self, fruit_manifest, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("sample_id,label,e0\nghost/z.png,a-green,1.0\n")
        with pytest.raises(DataError, match="ghost/z.png"):
            import_embeddings(f, fruit_manifest)

    def test_ragged_row_rejected(self, fruit_manifest, tmp_path):
        sid = fruit_manifest.entries[0].sample_id
        f = tmp_path / "e.csv"
        f.write_text(f"sample_id,label,e0,e1\n{sid},a-green,1.0\n")
        with pytest.raises(DataError, match=":2"):
            import_embeddings(f, fruit_manifest)

    def test_non_finite_rejected(self, fruit_manifest, tmp_path):
        sid = fruit_manifest.entries[0].sample_id
        f = tmp_path / "e.csv"
        f.write_text(f"sample_id,label,e0\n{sid},a-green,nan\n")
        with pytest.raises(DataError, match="non-finite"):
            import_embeddings(f, fruit_manifest)

    def test_label_mismatch_rejected(self, fruit_manifest, tmp_path):
        sid = fruit_manifest.entries[0].sample_id  # class a-green
        f = tmp_path / "e.csv"
        f.write_text(f"sample_id,label,e0\n{sid},d-brown,1.0\n")
        with pytest.raises(DataError, match="disagrees"):
            import_embeddings(f, fruit_manifest)

    def test_external_dim_free(self, fruit_manifest, tmp_path):
        # simulates externally produced wide CNN features
        sid0 = fruit_manifest.entries[0].sample_id
        sid1 = fruit_manifest.entries[-1].sample_id
        dim = 64
        header = "sample_id,label," + ",".join(f"e{i}" for i in range(dim))
        row0 = f"{sid0},a-green," + ",".join("0.5" for _ in range(dim))
        row1 = f"{sid1},d-brown," + ",".join("1.5" for _ in range(dim))
        f = tmp_path / "cnn.csv"
        f.write_text(header + "\n" + row0 + "\n" + row1 + "\n")
        es = import_embeddings(f, fruit_manifest)
        assert es.dim == dim
        assert es.model_tag == "cnn"


def test_embedding_set_validation():
    with pytest.raises(DataError):
        EmbeddingSet(
            model_tag="x",
            class_names=("a", "b"),
            ids=("s1",),
            vectors=np.array([[np.inf, 0.0]], dtype=np.float32),
            label_idx=np.array([0]),
        )
