#pragma once

#include "rmkit/baselines.hpp"
#include "rmkit/config_io.hpp"
#include "rmkit/dataset_io.hpp"
#include "rmkit/errors.hpp"
#include "rmkit/eval.hpp"
#include "rmkit/fresnel.hpp"
#include "rmkit/geometry.hpp"
#include "rmkit/material.hpp"
#include "rmkit/perturbation.hpp"
#include "rmkit/pipeline.hpp"
#include "rmkit/rasterizer.hpp"
#include "rmkit/raytracer.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"
#include "rmkit/scene_gen.hpp"
#include "rmkit/scene_io.hpp"
