#pragma once

#include "osubeats/agreement.hpp"
#include "osubeats/audio_probe.hpp"
#include "osubeats/beat_eval.hpp"
#include "osubeats/beat_grid.hpp"
#include "osubeats/corpus_ingest.hpp"
#include "osubeats/dataset_export.hpp"
#include "osubeats/error.hpp"
#include "osubeats/md5.hpp"
#include "osubeats/osu_format.hpp"
#include "osubeats/partition.hpp"
#include "osubeats/pipeline.hpp"
#include "osubeats/zip_reader.hpp"
