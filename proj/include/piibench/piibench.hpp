#pragma once

#include "piibench/allocate.hpp"
#include "piibench/analysis.hpp"
#include "piibench/biospan.hpp"
#include "piibench/error.hpp"
#include "piibench/ingest_xml.hpp"
#include "piibench/labelspace.hpp"
#include "piibench/manifest.hpp"
#include "piibench/objective.hpp"
#include "piibench/pipeline.hpp"
#include "piibench/record.hpp"
#include "piibench/rng.hpp"
#include "piibench/scorer.hpp"
#include "piibench/sha256.hpp"
