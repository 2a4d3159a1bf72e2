"""Hash-index approximate nearest neighbor search.

Random-projection LSH codes with interchangeable candidate-locating
procedures (hamming ranking, multi-table bucket search, quantized hamming
ranking, kmeans quantization index), an exact brute-force oracle, and a
recall-time sweep harness.
"""

from hashline._core import (
    BitCode,
    BucketDirectory,
    GroundTruth,
    HashIndex,
    KmeansPartition,
    PackedCodes,
    ProjectionMatrix,
    QueryRecord,
    SearchParams,
    SweepRecord,
    brute_force_ground_truth,
    bucket_search_locate,
    buckets_at_radius,
    build_bucket_directory,
    encode,
    encode_batch,
    export_codes_file,
    export_packed_codes,
    hamming_distance,
    hamming_ranking_locate,
    hamming_to_all,
    import_codes_file,
    import_packed_codes,
    kmeans_train,
    kmeansqi_locate,
    load_index,
    nearest_clusters,
    pack_codes,
    quantized_locate,
    read_fvecs,
    read_ivecs,
    recall,
    rerank,
    run_sweep,
    save_index,
    search,
    search_coded,
    train_rplsh,
    unpack_codes,
    write_fvecs,
    write_ivecs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
