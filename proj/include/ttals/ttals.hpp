#pragma once

#include "als.hpp"
#include "chain_sampler.hpp"
#include "dense_tensor.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "row_sampler.hpp"
#include "shape.hpp"
#include "sparse_tensor.hpp"
#include "tensor_train.hpp"
#include "ttsvd.hpp"
