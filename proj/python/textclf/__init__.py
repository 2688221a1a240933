"""Python face of the textclf toolkit."""

from ._core import (
    TextclfError,
    discriminative_lrs,
    eval_file,
    gbdt_predict,
    gbdt_train,
    polarity_score,
    predict_texts,
    pretrain_file,
    report,
    stlr_lr,
    svm_predict,
    svm_train,
    tfidf_matrix,
    tokenize,
    train_file,
    unfreeze_mask,
)

__all__ = [
    "TextclfError",
    "discriminative_lrs",
    "eval_file",
    "gbdt_predict",
    "gbdt_train",
    "polarity_score",
    "predict_texts",
    "pretrain_file",
    "report",
    "stlr_lr",
    "svm_predict",
    "svm_train",
    "tfidf_matrix",
    "tokenize",
    "train_file",
    "unfreeze_mask",
]
