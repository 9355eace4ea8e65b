#pragma once

#include "bmtf/fit.hpp"

#include <filesystem>

namespace bmtf {

/**
 * Posterior archive layout:
 *
 *   run.json                 model, seed, hyperparameters, schedule, view layout
 *   transform.csv            view,feature,slab,center,scale
 *   chain_<c>/snapshots.csv  snapshot,param,block,a,b,c,value
 *   chain_<c>/trace.csv      sweep,log_joint,mse_view_0,...
 *
 * All reals are written with 17 significant digits, so reading an archive
 * back reproduces every value exactly, and writing the same fit twice gives
 * byte-identical files.
 */
void write_archive(const std::filesystem::path& dir, const FitResult& fit);
FitResult read_archive(const std::filesystem::path& dir);

}  // namespace bmtf
