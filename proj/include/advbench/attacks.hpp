#pragma once

#include "advbench/attacks/dag.hpp"
#include "advbench/attacks/deepfool.hpp"
#include "advbench/attacks/fgsm.hpp"
#include "advbench/attacks/result.hpp"
#include "advbench/attacks/sma.hpp"
