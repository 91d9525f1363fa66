export { evalAuc, rankAuc, type AucSummary } from "./auc.js";
export { attributeName, makeDataset, type Sample } from "./data.js";
export {
  Conv2d,
  Dense,
  GroupNorm,
  MaxPool2,
  ReLU,
  SecondOrderPooling,
  SpatialDropout,
  secondOrderPoolingBackward,
  secondOrderPoolingForward,
  sigmoid,
  type Layer,
  type Param,
} from "./layers.js";
export { readLabelVocabulary } from "./labels.js";
export {
  buildModel,
  DEFAULT_MODEL_CONFIG,
  DilatedBlock,
  Model,
  validateConfig,
  type ModelConfig,
} from "./model.js";
export { Rng } from "./rng.js";
export {
  addInPlace,
  at,
  clone,
  concatChannels,
  set,
  splitChannels,
  zeros,
  type Tensor,
} from "./tensor.js";
export {
  DEFAULT_TRAIN_CONFIG,
  evaluate,
  trainToy,
  validateTrainConfig,
  type TrainConfig,
  type TrainHistory,
} from "./train.js";
export { main, runTrain } from "./cli.js";
