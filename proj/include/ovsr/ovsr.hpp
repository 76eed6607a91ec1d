#pragma once

#include "ovsr/autodiff.hpp"
#include "ovsr/cli.hpp"
#include "ovsr/config.hpp"
#include "ovsr/data.hpp"
#include "ovsr/generator.hpp"
#include "ovsr/loss.hpp"
#include "ovsr/lr_schedule.hpp"
#include "ovsr/metrics.hpp"
#include "ovsr/model.hpp"
#include "ovsr/model_config.hpp"
#include "ovsr/ops.hpp"
#include "ovsr/optimizer.hpp"
#include "ovsr/parallel.hpp"
#include "ovsr/resample.hpp"
#include "ovsr/scheduler.hpp"
#include "ovsr/tensor.hpp"
#include "ovsr/tensor_io.hpp"
#include "ovsr/trainer.hpp"
