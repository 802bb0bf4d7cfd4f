# supernet/network/spec.py

from typing import List, Literal, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

Activation = Literal["relu", "elu", "softmax", "identity"]


class LayerSpec(BaseModel):
    """One dense layer: width, activation, dropout on its output and L2 on its weights."""

    model_config = ConfigDict(frozen=True)

    width: int = Field(..., ge=1, description="Number of neurons")
    activation: Activation = Field("relu", description="Activation applied to the pre-activation")
    elu_alpha: float = Field(1.0, gt=0.0, description="Alpha of the elu activation")
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0, description="Dropout applied to this layer's output in training")
    l2_coeff: float = Field(0.0, ge=0.0, description="L2 penalty coefficient on this layer's weights")
    l2_bias: bool = Field(False, description="Also penalize this layer's bias with l2_coeff")


class NetworkSpec(BaseModel):
    """
    Architecture of a dense feed-forward classifier.

    The final layer must be a softmax of width ``num_classes`` without dropout;
    softmax is not allowed anywhere else.
    """

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(..., ge=1, description="Number of input features")
    layers: List[LayerSpec] = Field(..., min_length=1, description="Layers from input to output")

    @model_validator(mode="after")
    def check_layers(self) -> "NetworkSpec":
        final = self.layers[-1]
        if final.activation != "softmax":
            raise ValueError("the final layer must use the softmax activation")
        if final.dropout_rate != 0.0:
            raise ValueError("the final layer cannot use dropout")
        for index, layer in enumerate(self.layers[:-1]):
            if layer.activation == "softmax":
                raise ValueError(f"softmax is only allowed on the final layer, found it on layer {index}")
        return self

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_classes(self) -> int:
        return self.layers[-1].width

    @property
    def hidden_widths(self) -> List[int]:
        return [layer.width for layer in self.layers[:-1]]

    @property
    def penultimate_width(self) -> int:
        return self.layers[-2].width if len(self.layers) > 1 else self.input_dim

    def fan_ins(self) -> List[int]:
        return [self.input_dim] + [layer.width for layer in self.layers[:-1]]

    def parameter_count(self, include_head: bool = True) -> int:
        layers = list(zip(self.fan_ins(), self.layers))
        if not include_head:
            layers = layers[:-1]
        return sum(fan_in * layer.width + layer.width for fan_in, layer in layers)

    @classmethod
    def mlp(
        cls,
        input_dim: int,
        widths: Sequence[int],
        activation: Activation = "relu",
        dropout_rate: float = 0.0,
        l2_coeff: float = 0.0,
    ) -> "NetworkSpec":
        """
        Build the usual MLP: hidden layers share activation, dropout and L2;
        the last entry of ``widths`` is the softmax output.

        Example:
        >>> NetworkSpec.mlp(784, [360, 840, 840, 10], dropout_rate=0.3).hidden_widths
        [360, 840, 840]
        """
        hidden = [
            LayerSpec(width=w, activation=activation, dropout_rate=dropout_rate, l2_coeff=l2_coeff)
            for w in widths[:-1]
        ]
        head = LayerSpec(width=widths[-1], activation="softmax", l2_coeff=l2_coeff)
        return cls(input_dim=input_dim, layers=hidden + [head])
