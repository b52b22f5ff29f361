#ifndef KFPLS_KFPLS_HPP
#define KFPLS_KFPLS_HPP

#include "kfpls/datasets.hpp"
#include "kfpls/experiments.hpp"
#include "kfpls/io.hpp"
#include "kfpls/kernel_flows.hpp"
#include "kfpls/kernels.hpp"
#include "kfpls/kpls.hpp"
#include "kfpls/metrics.hpp"
#include "kfpls/pipeline.hpp"
#include "kfpls/pls.hpp"
#include "kfpls/random.hpp"
#include "kfpls/types.hpp"

#endif // KFPLS_KFPLS_HPP
